#ifndef TOWTRACK_CSV_H_
#define TOWTRACK_CSV_H_

#include <filesystem>
#include <string>
#include <vector>

namespace towtrack {

// Numeric CSV table with a mandatory header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row
};

// Reads `path` and checks that the header equals `expected_header`
// exactly. Blank lines are skipped. Throws IngestionError with the
// offending line number on any malformed cell.
CsvTable ReadNumericCsv(const std::filesystem::path& path,
                        const std::vector<std::string>& expected_header);

// Same, but accepts any header and returns it.
CsvTable ReadNumericCsv(const std::filesystem::path& path);

}  // namespace towtrack

#endif  // TOWTRACK_CSV_H_

#include "towtrack/csv.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "towtrack/errors.h"

namespace towtrack {

namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(Trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double ParseCell(const std::string& cell, std::size_t line) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    throw IngestionError(
        fmt::format("line {}: '{}' is not a number", line, cell), line);
  }
  return value;
}

CsvTable Read(const std::filesystem::path& path,
              const std::vector<std::string>* expected) {
  std::ifstream in(path);
  if (!in) {
    throw IngestionError(fmt::format("cannot open '{}'", path.string()), 0);
  }
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    auto cells = Split(line);
    if (!have_header) {
      if (expected != nullptr && cells != *expected) {
        std::string want;
        for (const auto& h : *expected) want += (want.empty() ? "" : ",") + h;
        throw IngestionError(
            fmt::format("line {}: expected header '{}'", line_no, want),
            line_no);
      }
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw IngestionError(fmt::format("line {}: expected {} columns, got {}",
                                       line_no, table.header.size(),
                                       cells.size()),
                           line_no);
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& cell : cells) row.push_back(ParseCell(cell, line_no));
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) {
    throw IngestionError(
        fmt::format("'{}' is empty: no header and no samples", path.string()),
        0);
  }
  return table;
}

}  // namespace

CsvTable ReadNumericCsv(const std::filesystem::path& path,
                        const std::vector<std::string>& expected_header) {
  return Read(path, &expected_header);
}

CsvTable ReadNumericCsv(const std::filesystem::path& path) {
  return Read(path, nullptr);
}

}  // namespace towtrack

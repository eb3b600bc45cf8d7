#ifndef TOWTRACK_POWERTRAIN_H_
#define TOWTRACK_POWERTRAIN_H_

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace towtrack {

inline constexpr int kMapOrder = 6;

// Map gains at or below this value [N per throttle unit] are degenerate.
inline constexpr double kDegenerateMapGain = 1e-6;

// Propulsion force F_p = u1 * [1 v v^2 v^3 v^4 v^5] * coeffs.
struct PropulsionMap {
  std::array<double, kMapOrder> coeffs{};
  double u1_min = 0.0;
  double u1_max = 300.0;
  double v_max = 5.0;  // [m/s], fitted validity speed

  // Coefficients identified off-line on the reference tractor.
  static PropulsionMap Identified();

  void Validate() const;
};

// Brake force F_b = u3 * ratio, ratio < 0 so that u3 >= 0 decelerates.
struct BrakeParams {
  double ratio = -800.0;  // [N per pressure unit]
  double u3_max = 40.0;

  void Validate() const;
};

struct MapFitSample {
  double u1 = 0.0;
  double v = 0.0;
  double force = 0.0;
};

struct FitReport {
  PropulsionMap map;
  double rms_residual = 0.0;  // [N]
  std::size_t sample_count = 0;
  double condition_number = 0.0;  // of the column-scaled regressor
};

enum class DriveMode { kThrottle, kBrake };

struct ThrottleCommand {
  double u1 = 0.0;
  bool saturated = false;
};

struct DriveCommand {
  DriveMode mode = DriveMode::kThrottle;
  double u1 = 0.0;
  double u3 = 0.0;
  double drive_force = 0.0;  // realized F_d [N]
  bool saturated = false;
};

// V(v)^T * coeffs. Throws DomainError if v is outside [0, v_max].
double MapGain(const PropulsionMap& map, double v);

// Throws DomainError outside [u1_min, u1_max] x [0, v_max].
double EvaluateMap(const PropulsionMap& map, double u1, double v);

// Throttle that produces `force` at speed v, clamped to the throttle range.
// Throws DegenerateMapError when MapGain(v) <= kDegenerateMapGain and
// DomainError for negative forces.
ThrottleCommand InvertMap(const PropulsionMap& map, double force, double v);

// Least-squares identification of the six coefficients. Throws
// IllConditionedFitError for empty or rank-deficient data sets.
FitReport FitMap(std::span<const MapFitSample> samples);

// Throttle/brake switch: omega2 >= 0 throttles, omega2 < 0 brakes.
DriveCommand SelectDriveActuation(double omega2, const PropulsionMap& map,
                                  const BrakeParams& brake, double v);

// Force realized by a held command at speed v.
double RealizedDriveForce(const DriveCommand& command, const PropulsionMap& map,
                          const BrakeParams& brake, double v);

// CSV with header `u1,v,F`.
std::vector<MapFitSample> ReadMapSamplesCsv(const std::filesystem::path& path);

// Map files are small YAML documents.
void WriteMapFile(const std::filesystem::path& path, const PropulsionMap& map);
PropulsionMap ReadMapFile(const std::filesystem::path& path);

std::string FormatCoefficients(const PropulsionMap& map);

}  // namespace towtrack

#endif  // TOWTRACK_POWERTRAIN_H_

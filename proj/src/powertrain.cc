#include "towtrack/powertrain.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "towtrack/csv.h"
#include "towtrack/errors.h"

namespace towtrack {

namespace {

// Singular values below this fraction of the largest one count as zero.
constexpr double kRankTolerance = 1e-10;

std::array<double, kMapOrder> SpeedBasis(double v) {
  std::array<double, kMapOrder> basis{};
  double power = 1.0;
  for (double& b : basis) {
    b = power;
    power *= v;
  }
  return basis;
}

void CheckSpeed(const PropulsionMap& map, double v) {
  if (!(v >= 0.0 && v <= map.v_max)) {
    throw DomainError(fmt::format(
        "speed {} m/s outside propulsion map domain [0, {}]", v, map.v_max));
  }
}

std::string DescribeDirection(const Eigen::VectorXd& direction) {
  std::string out;
  for (int j = 0; j < direction.size(); ++j) {
    const double w = direction[j];
    if (std::abs(w) < 1e-6) continue;
    if (out.empty()) {
      out += fmt::format("{:.3g}*beta{}", w, j + 1);
    } else {
      out += fmt::format(" {} {:.3g}*beta{}", w < 0 ? '-' : '+', std::abs(w),
                         j + 1);
    }
  }
  return out;
}

}  // namespace

PropulsionMap PropulsionMap::Identified() {
  PropulsionMap map;
  map.coeffs = {26.2, -9.999, 3.018, -1.041, 0.2354, -0.021};
  return map;
}

void PropulsionMap::Validate() const {
  if (!(u1_min >= 0.0 && u1_max > u1_min)) {
    throw ConfigError("propulsion: throttle range must satisfy 0 <= u1_min < u1_max");
  }
  if (!(v_max > 0.0)) throw ConfigError("propulsion: v_max must be > 0");
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw ConfigError("propulsion: non-finite coefficient");
  }
}

void BrakeParams::Validate() const {
  if (!(ratio < 0.0)) throw ConfigError("brake: ratio must be < 0");
  if (!(u3_max > 0.0)) throw ConfigError("brake: u3_max must be > 0");
}

double MapGain(const PropulsionMap& map, double v) {
  CheckSpeed(map, v);
  // Horner form of the fifth-order polynomial.
  double gain = 0.0;
  for (int j = kMapOrder - 1; j >= 0; --j) gain = gain * v + map.coeffs[j];
  return gain;
}

double EvaluateMap(const PropulsionMap& map, double u1, double v) {
  if (!(u1 >= map.u1_min && u1 <= map.u1_max)) {
    throw DomainError(fmt::format("throttle {} outside [{}, {}]", u1,
                                  map.u1_min, map.u1_max));
  }
  return u1 * MapGain(map, v);
}

ThrottleCommand InvertMap(const PropulsionMap& map, double force, double v) {
  if (!(force >= 0.0)) {
    throw DomainError(fmt::format("cannot invert map for force {} N", force));
  }
  const double gain = MapGain(map, v);
  if (gain <= kDegenerateMapGain) {
    throw DegenerateMapError(fmt::format(
        "propulsion map gain {} at v = {} m/s is degenerate", gain, v));
  }
  const double nominal = force / gain;
  ThrottleCommand cmd;
  cmd.u1 = std::clamp(nominal, map.u1_min, map.u1_max);
  cmd.saturated = cmd.u1 != nominal;
  return cmd;
}

FitReport FitMap(std::span<const MapFitSample> samples) {
  if (samples.empty()) throw IllConditionedFitError("no samples", {});

  std::set<double> throttles;
  std::set<double> speeds;
  bool any_throttle = false;
  for (const auto& s : samples) {
    if (!(s.u1 >= 0.0 && s.v >= 0.0) || !std::isfinite(s.force)) {
      throw DomainError(fmt::format(
          "invalid sample (u1={}, v={}, F={}): u1 and v must be >= 0", s.u1,
          s.v, s.force));
    }
    throttles.insert(s.u1);
    speeds.insert(s.v);
    any_throttle = any_throttle || s.u1 > 0.0;
  }
  if (!any_throttle) {
    throw IllConditionedFitError(
        "rank deficiency: every sample has zero throttle, no coefficient is "
        "identifiable",
        {"beta1..beta6"});
  }
  if (throttles.size() < 2) {
    throw IllConditionedFitError(
        fmt::format("rank deficiency: samples span only one distinct throttle "
                    "level ({}), need at least 2",
                    *throttles.begin()),
        {"throttle"});
  }

  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd regressor(n, kMapOrder);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto basis = SpeedBasis(samples[i].v);
    for (int j = 0; j < kMapOrder; ++j) {
      regressor(i, j) = samples[i].u1 * basis[j];
    }
    target[i] = samples[i].force;
  }

  // Column scaling keeps the Vandermonde-like regressor well conditioned.
  Eigen::VectorXd scale = regressor.colwise().norm().transpose();
  std::vector<std::string> deficient;
  for (int j = 0; j < kMapOrder; ++j) {
    if (scale[j] == 0.0) {
      deficient.push_back(fmt::format("beta{}", j + 1));
      scale[j] = 1.0;
    }
  }
  const Eigen::MatrixXd scaled = regressor * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double threshold = kRankTolerance * sigma[0];
  if (deficient.empty()) {
    for (int k = 0; k < sigma.size(); ++k) {
      if (sigma[k] > threshold) continue;
      Eigen::VectorXd dir = scale.cwiseInverse().cwiseProduct(svd.matrixV().col(k));
      dir /= dir.cwiseAbs().maxCoeff();
      deficient.push_back(DescribeDirection(dir));
    }
  }
  if (n < kMapOrder || !deficient.empty()) {
    std::string names;
    for (const auto& d : deficient) names += (names.empty() ? "" : "; ") + d;
    throw IllConditionedFitError(
        fmt::format("rank deficiency: {} samples over {} distinct speeds cannot "
                    "identify {}",
                    n, speeds.size(), names.empty() ? "all six coefficients" : names),
        deficient);
  }

  svd.setThreshold(kRankTolerance);
  const Eigen::VectorXd solution = svd.solve(target).cwiseQuotient(scale);

  FitReport report;
  report.map.u1_min = 0.0;
  report.map.u1_max = *throttles.rbegin();
  report.map.v_max = *speeds.rbegin();
  for (int j = 0; j < kMapOrder; ++j) report.map.coeffs[j] = solution[j];
  const Eigen::VectorXd residual = regressor * solution - target;
  report.rms_residual = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
  report.sample_count = samples.size();
  report.condition_number = sigma[0] / sigma[sigma.size() - 1];
  return report;
}

DriveCommand SelectDriveActuation(double omega2, const PropulsionMap& map,
                                  const BrakeParams& brake, double v) {
  if (!std::isfinite(omega2)) {
    throw DomainError("desired drive force is not finite");
  }
  DriveCommand cmd;
  if (omega2 >= 0.0) {
    const ThrottleCommand throttle = InvertMap(map, omega2, v);
    cmd.mode = DriveMode::kThrottle;
    cmd.u1 = throttle.u1;
    cmd.saturated = throttle.saturated;
    cmd.drive_force = throttle.saturated ? EvaluateMap(map, cmd.u1, v) : omega2;
  } else {
    const double nominal = omega2 / brake.ratio;
    cmd.mode = DriveMode::kBrake;
    cmd.u3 = std::clamp(nominal, 0.0, brake.u3_max);
    cmd.saturated = cmd.u3 != nominal;
    cmd.drive_force = cmd.saturated ? cmd.u3 * brake.ratio : omega2;
  }
  return cmd;
}

double RealizedDriveForce(const DriveCommand& command, const PropulsionMap& map,
                          const BrakeParams& brake, double v) {
  if (command.mode == DriveMode::kBrake) return command.u3 * brake.ratio;
  return EvaluateMap(map, command.u1, v);
}

std::vector<MapFitSample> ReadMapSamplesCsv(const std::filesystem::path& path) {
  const CsvTable table = ReadNumericCsv(path, {"u1", "v", "F"});
  std::vector<MapFitSample> samples;
  samples.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row[0] < 0.0 || row[1] < 0.0) {
      throw IngestionError(fmt::format("line {}: u1 and v must be >= 0",
                                       table.line_numbers[i]),
                           table.line_numbers[i]);
    }
    samples.push_back({row[0], row[1], row[2]});
  }
  return samples;
}

void WriteMapFile(const std::filesystem::path& path, const PropulsionMap& map) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "coefficients" << YAML::Value << YAML::Flow
      << YAML::BeginSeq;
  for (double c : map.coeffs) out << c;
  out << YAML::EndSeq;
  out << YAML::Key << "u1_min" << YAML::Value << map.u1_min;
  out << YAML::Key << "u1_max" << YAML::Value << map.u1_max;
  out << YAML::Key << "v_max" << YAML::Value << map.v_max;
  out << YAML::EndMap;
  std::ofstream file(path);
  if (!file) throw Error(fmt::format("cannot write '{}'", path.string()));
  file << out.c_str() << '\n';
}

PropulsionMap ReadMapFile(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  PropulsionMap map;
  bool have_coeffs = false;
  try {
    for (const auto& kv : root) {
      const auto key = kv.first.as<std::string>();
      if (key == "coefficients") {
        const auto values = kv.second.as<std::vector<double>>();
        if (values.size() != kMapOrder) {
          throw ConfigError(fmt::format("{}: coefficients must have 6 entries",
                                        path.string()));
        }
        std::copy(values.begin(), values.end(), map.coeffs.begin());
        have_coeffs = true;
      } else if (key == "u1_min") {
        map.u1_min = kv.second.as<double>();
      } else if (key == "u1_max") {
        map.u1_max = kv.second.as<double>();
      } else if (key == "v_max") {
        map.v_max = kv.second.as<double>();
      } else {
        throw ConfigError(fmt::format("{}:{}: unknown key '{}'", path.string(),
                                      kv.first.Mark().line + 1, key));
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!have_coeffs) {
    throw ConfigError(fmt::format("{}: missing 'coefficients'", path.string()));
  }
  map.Validate();
  return map;
}

std::string FormatCoefficients(const PropulsionMap& map) {
  return fmt::format("[{:.6g}, {:.6g}, {:.6g}, {:.6g}, {:.6g}, {:.6g}]",
                     map.coeffs[0], map.coeffs[1], map.coeffs[2], map.coeffs[3],
                     map.coeffs[4], map.coeffs[5]);
}

}  // namespace towtrack

#include "towtrack/trajectory.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "towtrack/csv.h"
#include "towtrack/errors.h"

namespace towtrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckTime(double t) {
  if (!(t >= 0.0)) {
    throw DomainError(fmt::format("reference requested at t = {} < 0", t));
  }
}

// Constant-curvature piece of a path; zero curvature is a straight line.
struct Segment {
  double length;
  double curvature;
};

struct Pose {
  double x, y, theta;
};

Pose Advance(const Pose& start, const Segment& seg, double s) {
  if (seg.curvature == 0.0) {
    return {start.x + s * std::cos(start.theta),
            start.y + s * std::sin(start.theta), start.theta};
  }
  const double k = seg.curvature;
  const double theta = start.theta + k * s;
  return {start.x + (std::sin(theta) - std::sin(start.theta)) / k,
          start.y - (std::cos(theta) - std::cos(start.theta)) / k, theta};
}

// Arc-length parameterized chain of line/arc segments traversed with a
// speed profile. Periodic paths must close in position.
class PathTrajectory final : public Trajectory {
 public:
  PathTrajectory(Pose start, std::vector<Segment> segments, bool periodic,
                 SpeedProfile speed)
      : segments_(std::move(segments)), periodic_(periodic), speed_(speed) {
    Pose pose = start;
    double s = 0.0;
    for (const auto& seg : segments_) {
      starts_.push_back(pose);
      offsets_.push_back(s);
      if (std::isfinite(seg.length)) {
        pose = Advance(pose, seg, seg.length);
        s += seg.length;
      }
    }
    total_length_ = s;
    lap_heading_change_ = pose.theta - start.theta;
  }

  ReferenceSample Sample(double t) const override {
    CheckTime(t);
    const auto [s, v, a, jerk] = speed_.Evaluate(t);
    const auto [seg, local, heading_offset] = Locate(s);
    const Pose pose = Advance(starts_[seg], segments_[seg], local);
    const double k = segments_[seg].curvature;

    ReferenceSample r;
    r.x_d = pose.x;
    r.y_d = pose.y;
    r.theta_d = pose.theta + heading_offset;
    r.v_d = v;
    r.theta_d_dot = k * v;
    r.v_d_dot = a;
    r.theta_d_ddot = k * a;
    r.v_d_ddot = jerk;
    return r;
  }

  double Curvature(double t) const override {
    CheckTime(t);
    const auto [s, v, a, jerk] = speed_.Evaluate(t);
    return segments_[std::get<0>(Locate(s))].curvature;
  }

 private:
  std::tuple<std::size_t, double, double> Locate(double s) const {
    double heading_offset = 0.0;
    if (periodic_) {
      const double lap = std::floor(s / total_length_);
      s -= lap * total_length_;
      heading_offset = lap * lap_heading_change_;
    }
    std::size_t seg = 0;
    while (seg + 1 < segments_.size() && s >= offsets_[seg + 1]) ++seg;
    return {seg, s - offsets_[seg], heading_offset};
  }

  std::vector<Segment> segments_;
  std::vector<Pose> starts_;
  std::vector<double> offsets_;
  bool periodic_;
  SpeedProfile speed_;
  double total_length_ = 0.0;
  double lap_heading_change_ = 0.0;
};

// Per-sample local cubic x(t), y(t) around sample time `t0`.
struct LocalFit {
  double t0;
  std::array<double, 4> x;  // value, 1st, 2nd, 3rd derivative at t0
  std::array<double, 4> y;
  double theta_unwrapped;
};

class TabulatedTrajectory final : public Trajectory {
 public:
  explicit TabulatedTrajectory(std::vector<LocalFit> fits)
      : fits_(std::move(fits)) {}

  ReferenceSample Sample(double t) const override {
    const LocalFit& f = Nearest(t);
    const double h = t - f.t0;
    auto eval = [h](const std::array<double, 4>& c) {
      return std::array<double, 4>{
          c[0] + h * (c[1] + h * (c[2] / 2.0 + h * c[3] / 6.0)),
          c[1] + h * (c[2] + h * c[3] / 2.0), c[2] + h * c[3], c[3]};
    };
    const auto [x, xd, xdd, xddd] = eval(f.x);
    const auto [y, yd, ydd, yddd] = eval(f.y);

    ReferenceSample r;
    r.x_d = x;
    r.y_d = y;
    r.v_d = std::hypot(xd, yd);
    if (!(r.v_d > kMinReferenceSpeed)) {
      throw InvalidReferenceError(
          fmt::format("tabulated reference speed {} m/s at t = {} is not "
                      "positive",
                      r.v_d, t));
    }
    const double raw = std::atan2(yd, xd);
    const double turns =
        std::round((f.theta_unwrapped - raw) / (2.0 * std::numbers::pi));
    r.theta_d = raw + turns * 2.0 * std::numbers::pi;

    const double v = r.v_d;
    const double along = xd * xdd + yd * ydd;
    const double cross = xd * ydd - yd * xdd;
    r.v_d_dot = along / v;
    r.theta_d_dot = cross / (v * v);
    r.v_d_ddot = (xdd * xdd + xd * xddd + ydd * ydd + yd * yddd) / v -
                 along * r.v_d_dot / (v * v);
    r.theta_d_ddot = (xd * yddd - yd * xddd) / (v * v) -
                     2.0 * cross * r.v_d_dot / (v * v * v);
    return r;
  }

  double Curvature(double t) const override {
    const ReferenceSample r = Sample(t);
    return r.theta_d_dot / r.v_d;
  }

 private:
  const LocalFit& Nearest(double t) const {
    CheckTime(t);
    if (t < fits_.front().t0 || t > fits_.back().t0) {
      throw DomainError(fmt::format("t = {} outside tabulated horizon [{}, {}]",
                                    t, fits_.front().t0, fits_.back().t0));
    }
    const auto upper = std::lower_bound(
        fits_.begin(), fits_.end(), t,
        [](const LocalFit& f, double value) { return f.t0 < value; });
    if (upper == fits_.begin()) return *upper;
    const auto lower = upper - 1;
    if (upper == fits_.end()) return *lower;
    return (t - lower->t0 <= upper->t0 - t) ? *lower : *upper;
  }

  std::vector<LocalFit> fits_;
};

double Smoothstep(double x) { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }

}  // namespace

void SpeedProfile::Validate() const {
  if (!(initial > kMinReferenceSpeed && final > kMinReferenceSpeed)) {
    throw ConfigError(fmt::format(
        "speed profile: speeds must exceed {} m/s", kMinReferenceSpeed));
  }
  if (!(ramp_start >= 0.0 && ramp_duration >= 0.0)) {
    throw ConfigError("speed profile: ramp_start and ramp_duration must be >= 0");
  }
  if (ramp_duration == 0.0 && final != initial) {
    throw ConfigError("speed profile: a speed change needs ramp_duration > 0");
  }
}

std::array<double, 4> SpeedProfile::Evaluate(double t) const {
  if (ramp_duration == 0.0 || t <= ramp_start) {
    return {initial * t, initial, 0.0, 0.0};
  }
  const double dv = final - initial;
  const double T = ramp_duration;
  if (t >= ramp_start + T) {
    return {initial * t + dv * (T / 2.0 + (t - ramp_start - T)), final, 0.0, 0.0};
  }
  const double x = (t - ramp_start) / T;
  // Integral of the smoothstep: 2.5 x^4 - 3 x^5 + x^6.
  const double integral = x * x * x * x * (2.5 + x * (-3.0 + x));
  const double slope = 30.0 * x * x * (1.0 - x) * (1.0 - x);
  const double curve = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
  return {initial * t + dv * T * integral, initial + dv * Smoothstep(x),
          dv / T * slope, dv / (T * T) * curve};
}

TrajectoryKind ParseTrajectoryKind(const std::string& name) {
  if (name == "line") return TrajectoryKind::kLine;
  if (name == "circle") return TrajectoryKind::kCircle;
  if (name == "figure_eight") return TrajectoryKind::kFigureEight;
  if (name == "s_curve") return TrajectoryKind::kSCurve;
  throw ConfigError(fmt::format(
      "unknown trajectory kind '{}' (line, circle, figure_eight, s_curve)", name));
}

std::string TrajectoryKindName(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kLine: return "line";
    case TrajectoryKind::kCircle: return "circle";
    case TrajectoryKind::kFigureEight: return "figure_eight";
    case TrajectoryKind::kSCurve: return "s_curve";
  }
  return "unknown";
}

double MinimumTurningRadius(const TractorParams& tractor) {
  return tractor.wheelbase() / std::tan(tractor.psi_max);
}

std::shared_ptr<const Trajectory> MakeGenerator(const GeneratorSpec& spec,
                                                const TractorParams& tractor) {
  spec.speed.Validate();
  const Pose start{spec.x0, spec.y0, spec.heading};
  if (spec.kind == TrajectoryKind::kLine) {
    return std::make_shared<PathTrajectory>(
        start, std::vector<Segment>{{kInf, 0.0}}, false, spec.speed);
  }

  const double r_min = MinimumTurningRadius(tractor);
  if (!(spec.radius >= r_min)) {
    throw InfeasibleTrajectoryError(
        fmt::format("radius {} m is below the minimum turning radius "
                    "L/tan(psi_max) = {:.6g} m",
                    spec.radius, r_min),
        r_min);
  }
  const double k = 1.0 / spec.radius;
  const double lap = 2.0 * std::numbers::pi * spec.radius;
  switch (spec.kind) {
    case TrajectoryKind::kCircle:
      return std::make_shared<PathTrajectory>(
          start, std::vector<Segment>{{lap, spec.clockwise ? -k : k}}, true,
          spec.speed);
    case TrajectoryKind::kFigureEight:
      return std::make_shared<PathTrajectory>(
          start, std::vector<Segment>{{lap, k}, {lap, -k}}, true, spec.speed);
    case TrajectoryKind::kSCurve: {
      if (!(spec.turn_angle > 0.0 && spec.lead_length >= 0.0)) {
        throw ConfigError("s_curve: turn_angle must be > 0 and lead_length >= 0");
      }
      const double arc = spec.radius * spec.turn_angle;
      std::vector<Segment> segs;
      if (spec.lead_length > 0.0) segs.push_back({spec.lead_length, 0.0});
      segs.push_back({arc, k});
      segs.push_back({arc, -k});
      segs.push_back({kInf, 0.0});
      return std::make_shared<PathTrajectory>(start, std::move(segs), false,
                                              spec.speed);
    }
    case TrajectoryKind::kLine:
      break;
  }
  throw ConfigError("unsupported trajectory kind");
}

std::shared_ptr<const Trajectory> LoadTrajectoryCsv(
    const std::filesystem::path& path) {
  const CsvTable table = ReadNumericCsv(path, {"t", "x", "y"});
  const auto n = table.rows.size();
  if (n < static_cast<std::size_t>(kTabulatedWindow)) {
    throw IngestionError(fmt::format("'{}': need at least {} samples, got {}",
                                     path.string(), kTabulatedWindow, n),
                         n + 1);
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(table.rows[i][0] > table.rows[i - 1][0])) {
      throw IngestionError(
          fmt::format("line {}: timestamps must be strictly increasing",
                      table.line_numbers[i]),
          table.line_numbers[i]);
    }
  }
  if (table.rows.front()[0] < 0.0) {
    throw IngestionError("trajectory timestamps must be >= 0",
                         table.line_numbers.front());
  }

  constexpr int kHalf = kTabulatedWindow / 2;
  std::vector<LocalFit> fits(n);
  double previous_theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t first = std::clamp<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(i) - kHalf, 0,
        static_cast<std::ptrdiff_t>(n) - kTabulatedWindow);
    const double t0 = table.rows[i][0];
    Eigen::Matrix<double, kTabulatedWindow, 4> basis;
    Eigen::Matrix<double, kTabulatedWindow, 2> values;
    for (int r = 0; r < kTabulatedWindow; ++r) {
      const auto& row = table.rows[first + r];
      const double h = row[0] - t0;
      basis.row(r) << 1.0, h, h * h / 2.0, h * h * h / 6.0;
      values.row(r) << row[1], row[2];
    }
    const Eigen::Matrix<double, 4, 2> coeffs =
        basis.colPivHouseholderQr().solve(values);
    LocalFit& f = fits[i];
    f.t0 = t0;
    for (int j = 0; j < 4; ++j) {
      f.x[j] = coeffs(j, 0);
      f.y[j] = coeffs(j, 1);
    }
    const double raw = std::atan2(f.y[1], f.x[1]);
    if (i == 0) {
      f.theta_unwrapped = raw;
    } else {
      const double turns =
          std::round((previous_theta - raw) / (2.0 * std::numbers::pi));
      f.theta_unwrapped = raw + turns * 2.0 * std::numbers::pi;
    }
    previous_theta = f.theta_unwrapped;
  }
  return std::make_shared<TabulatedTrajectory>(std::move(fits));
}

std::vector<TrajectoryRow> SampleTrajectory(const Trajectory& trajectory,
                                            double duration, double rate) {
  if (!(duration >= 0.0 && rate > 0.0)) {
    throw ConfigError("sampling needs duration >= 0 and rate > 0");
  }
  const auto count = static_cast<std::size_t>(std::floor(duration * rate + 1e-9));
  std::vector<TrajectoryRow> rows;
  rows.reserve(count + 1);
  for (std::size_t i = 0; i <= count; ++i) {
    const double t = static_cast<double>(i) / rate;
    const ReferenceSample r = trajectory.Sample(t);
    rows.push_back({t, r.x_d, r.y_d, r.theta_d, r.v_d});
  }
  return rows;
}

void WriteTrajectoryCsv(const std::filesystem::path& path,
                        const std::vector<TrajectoryRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << "t,x,y,theta,v\n";
  for (const auto& r : rows) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.t, r.x,
                       r.y, r.theta, r.v);
  }
}

}  // namespace towtrack

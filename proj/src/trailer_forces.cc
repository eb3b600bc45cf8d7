#include "towtrack/trailer_forces.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "towtrack/csv.h"
#include "towtrack/errors.h"

namespace towtrack {

namespace {

double Sign(double v) { return (v > 0.0) - (v < 0.0); }

std::vector<double> HeadingRates(const BodyMotion& tractor,
                                 const std::vector<double>& headings,
                                 std::span<const TrailerParams> trailers) {
  const auto motion = ChainKinematics(tractor, ChainState{headings}, trailers);
  std::vector<double> rates(motion.size());
  for (std::size_t i = 0; i < motion.size(); ++i) rates[i] = motion[i].yaw_rate;
  return rates;
}

}  // namespace

void TrailerParams::Validate() const {
  if (!(mass > 0.0)) throw ConfigError("trailer: mass must be > 0");
  if (!(drawbar_length > 0.0)) {
    throw ConfigError("trailer: drawbar_length must be > 0");
  }
  if (!(hitch_offset >= 0.0)) {
    throw ConfigError("trailer: hitch_offset must be >= 0");
  }
  if (!(rolling_resistance >= 0.0 && rolling_resistance < 0.1)) {
    throw ConfigError("trailer: rolling_resistance must lie in [0, 0.1)");
  }
}

std::vector<double> HitchAngles(double tractor_heading, const ChainState& chain) {
  std::vector<double> angles(chain.headings.size());
  double ahead = tractor_heading;
  for (std::size_t i = 0; i < chain.headings.size(); ++i) {
    angles[i] = ahead - chain.headings[i];
    ahead = chain.headings[i];
  }
  return angles;
}

std::vector<BodyMotion> ChainKinematics(const BodyMotion& tractor,
                                        const ChainState& chain,
                                        std::span<const TrailerParams> trailers) {
  if (chain.headings.size() != trailers.size()) {
    throw Error(fmt::format("chain has {} headings for {} trailers",
                            chain.headings.size(), trailers.size()));
  }
  std::vector<BodyMotion> motion(trailers.size());
  const BodyMotion* ahead = &tractor;
  for (std::size_t i = 0; i < trailers.size(); ++i) {
    const TrailerParams& p = trailers[i];
    const double gamma = ahead->heading - chain.headings[i];
    if (!(std::abs(gamma) < kJackKnifeAngle)) {
      throw JackKnifeError(
          fmt::format("trailer {} jack-knifed: hitch angle {} rad", i + 1, gamma),
          i, gamma);
    }
    const double sg = std::sin(gamma);
    const double cg = std::cos(gamma);
    const double d = p.hitch_offset;
    const double l = p.drawbar_length;

    BodyMotion& m = motion[i];
    m.heading = chain.headings[i];
    m.speed = ahead->speed * cg + d * ahead->yaw_rate * sg;
    m.yaw_rate = (ahead->speed * sg - d * ahead->yaw_rate * cg) / l;

    const double gamma_dot = ahead->yaw_rate - m.yaw_rate;
    m.accel = ahead->accel * cg - ahead->speed * sg * gamma_dot +
              d * ahead->yaw_accel * sg + d * ahead->yaw_rate * cg * gamma_dot;
    m.yaw_accel = (ahead->accel * sg + ahead->speed * cg * gamma_dot -
                   d * ahead->yaw_accel * cg +
                   d * ahead->yaw_rate * sg * gamma_dot) /
                  l;
    ahead = &m;
  }
  return motion;
}

ChainStepResult ChainKinematicsStep(const BodyMotion& tractor,
                                    const ChainState& chain,
                                    std::span<const TrailerParams> trailers,
                                    double dt) {
  const std::size_t n = chain.headings.size();
  auto tractor_at = [&](double s) {
    BodyMotion m = tractor;
    m.heading = tractor.heading + tractor.yaw_rate * s;
    m.accel = 0.0;
    m.yaw_accel = 0.0;
    return m;
  };
  auto offset = [&](const std::vector<double>& base,
                    const std::vector<double>& slope, double h) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = base[i] + h * slope[i];
    return out;
  };
  const auto& h0 = chain.headings;
  const auto k1 = HeadingRates(tractor_at(0.0), h0, trailers);
  const auto k2 = HeadingRates(tractor_at(dt / 2), offset(h0, k1, dt / 2), trailers);
  const auto k3 = HeadingRates(tractor_at(dt / 2), offset(h0, k2, dt / 2), trailers);
  const auto k4 = HeadingRates(tractor_at(dt), offset(h0, k3, dt), trailers);

  ChainStepResult result;
  result.chain.headings.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.chain.headings[i] =
        h0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  result.motion = ChainKinematics(tractor_at(dt), result.chain, trailers);
  return result;
}

HitchForce QuasiStaticHitchForce(const BodyMotion& tractor,
                                 const ChainState& chain,
                                 std::span<const TrailerParams> trailers) {
  if (trailers.empty()) return {};
  const auto motion = ChainKinematics(tractor, chain, trailers);

  // World-frame force exerted by trailer i+1 on trailer i at its rear pin.
  double rear_x = 0.0;
  double rear_y = 0.0;
  double front_x = 0.0;
  double front_y = 0.0;
  for (std::size_t k = trailers.size(); k-- > 0;) {
    const TrailerParams& p = trailers[k];
    const BodyMotion& m = motion[k];
    const double ex = std::cos(m.heading);
    const double ey = std::sin(m.heading);
    const double rear_t = rear_x * ex + rear_y * ey;
    const double rear_n = -rear_x * ey + rear_y * ex;
    const double rear_offset =
        k + 1 < trailers.size() ? trailers[k + 1].hitch_offset : 0.0;

    const double front_t = p.mass * m.accel +
                           p.rolling_resistance * kGravity * p.mass * Sign(m.speed) -
                           rear_t;
    const double front_n = rear_offset / p.drawbar_length * rear_n;
    front_x = front_t * ex - front_n * ey;
    front_y = front_t * ey + front_n * ex;
    rear_x = -front_x;
    rear_y = -front_y;
  }
  // The tractor pulls trailer 1 with `front`; it feels the opposite force.
  const double cx = std::cos(tractor.heading);
  const double cy = std::sin(tractor.heading);
  HitchForce h;
  h.hx = front_x * cx + front_y * cy;
  h.hy = -(-front_x * cy + front_y * cx);
  return h;
}

ForceProfile::ForceProfile(std::vector<ForceSample> samples)
    : samples_(std::move(samples)) {
  if (samples_.empty()) throw IngestionError("force profile has no samples", 0);
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (!(samples_[i].t > samples_[i - 1].t)) {
      throw IngestionError(
          fmt::format("force profile sample {}: timestamps must be strictly "
                      "increasing",
                      i + 1),
          i + 1);
    }
  }
}

HitchForce ReplayForce(const ForceProfile& profile, double t) {
  const auto& s = profile.samples();
  if (s.empty()) throw DomainError("replay from an empty force profile");
  if (t <= s.front().t) return {s.front().hx, s.front().hy};
  if (t >= s.back().t) return {s.back().hx, s.back().hy};
  const auto upper = std::upper_bound(
      s.begin(), s.end(), t,
      [](double value, const ForceSample& sample) { return value < sample.t; });
  const ForceSample& b = *upper;
  const ForceSample& a = *(upper - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return {a.hx + w * (b.hx - a.hx), a.hy + w * (b.hy - a.hy)};
}

ForceProfile ReadForceProfileCsv(const std::filesystem::path& path) {
  const CsvTable table = ReadNumericCsv(path, {"t", "Hx", "Hy"});
  if (table.rows.empty()) {
    throw IngestionError(
        fmt::format("'{}': force profile has no samples", path.string()), 1);
  }
  std::vector<ForceSample> samples;
  samples.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (i > 0 && !(row[0] > samples.back().t)) {
      throw IngestionError(
          fmt::format("line {}: timestamps must be strictly increasing",
                      table.line_numbers[i]),
          table.line_numbers[i]);
    }
    samples.push_back({row[0], row[1], row[2]});
  }
  return ForceProfile(std::move(samples));
}

void SensorModel::Validate() const {
  if (!(noise_sigma >= 0.0)) throw ConfigError("sensor: noise_sigma must be >= 0");
  if (!(sample_period > 0.0)) throw ConfigError("sensor: sample_period must be > 0");
  if (!(saturation > 0.0)) throw ConfigError("sensor: saturation must be > 0");
}

ForceSensor::ForceSensor(const SensorModel& model, std::uint64_t seed)
    : model_(model), rng_(seed) {
  model_.Validate();
}

HitchForce ForceSensor::Measure(const HitchForce& truth, double t) {
  // Sample index arithmetic avoids drift from accumulating the period.
  constexpr double kSlack = 1e-9;
  if (!has_sample_ || t >= next_sample_time_ - kSlack * model_.sample_period) {
    const double k = std::floor(t / model_.sample_period + kSlack);
    next_sample_time_ = (k + 1.0) * model_.sample_period;
    has_sample_ = true;
    HitchForce m = truth;
    m.hx += model_.bias;
    m.hy += model_.bias;
    if (model_.noise_sigma > 0.0) {
      m.hx += model_.noise_sigma * noise_(rng_);
      m.hy += model_.noise_sigma * noise_(rng_);
    }
    m.hx = std::clamp(m.hx, -model_.saturation, model_.saturation);
    m.hy = std::clamp(m.hy, -model_.saturation, model_.saturation);
    held_ = m;
  }
  return held_;
}

}  // namespace towtrack

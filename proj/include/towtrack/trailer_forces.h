#ifndef TOWTRACK_TRAILER_FORCES_H_
#define TOWTRACK_TRAILER_FORCES_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "towtrack/vehicle_model.h"

namespace towtrack {

inline constexpr double kGravity = 9.81;
inline constexpr double kJackKnifeAngle = 1.5707963267948966;  // pi/2
inline constexpr double kJackKnifeWarningAngle = 1.2;

// One passive full trailer. The hitch pin sits `hitch_offset` behind the
// axle midpoint of the body ahead (0 means on-axle) and `drawbar_length`
// ahead of this trailer's own axle midpoint.
struct TrailerParams {
  double mass = 630.0;               // [kg], payload included
  double hitch_offset = 0.0;         // d [m]
  double drawbar_length = 2.5;       // l [m]
  double rolling_resistance = 0.02;  // c_rr

  void Validate() const;
};

// Trailer yaw angles, first trailer first.
struct ChainState {
  std::vector<double> headings;
};

// Kinematics of the axle midpoint of a body (tractor rear axle or trailer
// axle).
struct BodyMotion {
  double heading = 0.0;
  double speed = 0.0;
  double yaw_rate = 0.0;
  double accel = 0.0;
  double yaw_accel = 0.0;
};

// Hitch angle theta_{i-1} - theta_i of every trailer.
std::vector<double> HitchAngles(double tractor_heading, const ChainState& chain);

// Off-axle n-trailer recursion. Fills speed, yaw rate and their derivatives
// for every trailer; throws JackKnifeError when a hitch angle reaches pi/2.
std::vector<BodyMotion> ChainKinematics(const BodyMotion& tractor,
                                        const ChainState& chain,
                                        std::span<const TrailerParams> trailers);

struct ChainStepResult {
  ChainState chain;
  std::vector<BodyMotion> motion;  // at the end of the step
};

// Advances the trailer headings by `dt` (classical RK4) while the tractor
// keeps constant speed and yaw rate.
ChainStepResult ChainKinematicsStep(const BodyMotion& tractor,
                                    const ChainState& chain,
                                    std::span<const TrailerParams> trailers,
                                    double dt);

// Quasi-static hitch load of the chain on the tractor.
//
// Each trailer is a point mass at its axle midpoint with no yaw inertia.
// Working from the last trailer forward, the longitudinal balance
//   m_i a_i = F_front,t + F_rear,t - c_rr m_i g sign(v_i)
// fixes the tangential pin force and the moment balance about the axle
//   l_i F_front,n = d_{i+1} F_rear,n
// fixes the normal one; lateral tyre forces absorb the rest. For an aligned
// chain this reduces to H_x = M v' + c_rr g M sign(v), H_y = 0.
HitchForce QuasiStaticHitchForce(const BodyMotion& tractor,
                                 const ChainState& chain,
                                 std::span<const TrailerParams> trailers);

struct ForceSample {
  double t = 0.0;
  double hx = 0.0;
  double hy = 0.0;
};

// Time-stamped hitch force table with strictly increasing timestamps.
class ForceProfile {
 public:
  ForceProfile() = default;
  // Throws IngestionError if empty or not strictly increasing.
  explicit ForceProfile(std::vector<ForceSample> samples);

  const std::vector<ForceSample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }

 private:
  std::vector<ForceSample> samples_;
};

// Linear interpolation, constant extrapolation beyond both ends.
HitchForce ReplayForce(const ForceProfile& profile, double t);

// CSV with header `t,Hx,Hy`.
ForceProfile ReadForceProfileCsv(const std::filesystem::path& path);

struct SensorModel {
  double noise_sigma = 0.0;       // [N]
  double bias = 0.0;              // [N], added to both axes
  double sample_period = 0.01;    // [s]
  double saturation = kHitchSensorRange;  // [N]

  void Validate() const;
};

// Load cell: zero-order hold at the sample period, bias, Gaussian noise,
// clamp to the measuring range.
class ForceSensor {
 public:
  ForceSensor(const SensorModel& model, std::uint64_t seed);

  HitchForce Measure(const HitchForce& truth, double t);

  const SensorModel& model() const { return model_; }

 private:
  SensorModel model_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_{0.0, 1.0};
  bool has_sample_ = false;
  double next_sample_time_ = 0.0;
  HitchForce held_;
};

}  // namespace towtrack

#endif  // TOWTRACK_TRAILER_FORCES_H_

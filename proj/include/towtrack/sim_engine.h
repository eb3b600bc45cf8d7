#ifndef TOWTRACK_SIM_ENGINE_H_
#define TOWTRACK_SIM_ENGINE_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "towtrack/controller.h"
#include "towtrack/powertrain.h"
#include "towtrack/trailer_forces.h"
#include "towtrack/trajectory.h"
#include "towtrack/vehicle_model.h"

namespace towtrack {

enum class ForceSource { kNone, kChain, kReplay };

// kSampled runs the controller every dt_control with zero-order hold on its
// commands and measured forces. kContinuous re-evaluates it inside every
// integrator stage on the true hitch force; that is the setting in which the
// Lyapunov identities hold exactly, and it needs a force source that does
// not depend on the tractor's acceleration (kNone or kReplay). Under
// kContinuous the previous steering command is the current one, so both
// SteeringRateSource values give the true steering rate.
enum class ControlTiming { kSampled, kContinuous };

// kIdeal sets tan(psi)/L := omega1 and F_d := omega2 directly; kBackstepping
// drives the steering lag, throttle map and brake.
enum class ActuationModel { kBackstepping, kIdeal };

struct PlantModel {
  TractorParams tractor;
  PropulsionMap map = PropulsionMap::Identified();
  BrakeParams brake;
  // trailers[0].hitch_offset is the tractor's c.
  std::vector<TrailerParams> trailers;
  ForceSource force_source = ForceSource::kNone;
  ForceProfile replay;

  void Validate() const;
};

struct PlantState {
  TractorState tractor;
  ChainState chain;
};

// Actuator inputs held over an integration step.
struct PlantInputs {
  ActuationModel actuation = ActuationModel::kBackstepping;
  DriveCommand drive;        // kBackstepping
  double u2 = 0.0;           // kBackstepping
  double curvature = 0.0;    // kIdeal
  double drive_force = 0.0;  // kIdeal
};

struct PlantRates {
  StateRate tractor;
  double psi_dot = 0.0;
  std::vector<double> trailer_yaw_rates;
  HitchForce hitch;          // true hitch load at this instant
  double drive_force = 0.0;  // realized F_d
};

// Right-hand side of the coupled tractor, steering actuator and trailer
// chain. With chain forces the hitch load depends on the tractor's own
// acceleration; the quasi-static model is affine in it, so the pair is
// solved exactly.
PlantRates PlantDerivative(const PlantModel& plant, const PlantState& state,
                           const PlantInputs& inputs, double t);

// One classical RK4 step with the inputs held constant.
PlantState IntegrateStep(const PlantModel& plant, const PlantState& state,
                         const PlantInputs& inputs, double t, double dt);

struct SimConfig {
  double dt_physics = 1e-3;
  double dt_control = 2e-2;
  double duration = 10.0;
  int log_decimation = 1;
  std::uint64_t seed = 0;
  ControlTiming timing = ControlTiming::kSampled;
  ActuationModel actuation = ActuationModel::kBackstepping;

  void Validate() const;
  // dt_control / dt_physics.
  int ControlRatio() const;
};

struct InitialCondition {
  // Absolute tractor state; when empty the state is placed at `error`
  // relative to the reference at t = 0, with steering angle `psi`.
  std::optional<TractorState> state;
  TrackingError error;
  double psi = 0.0;
  // theta_{i-1} - theta_i per trailer; empty means an aligned chain.
  std::vector<double> hitch_angles;
};

struct SimulationSetup {
  PlantModel plant;
  std::shared_ptr<const Trajectory> trajectory;
  ControllerGains gains;
  ControllerOptions controller;
  SensorModel sensor;
  SimConfig sim;
  InitialCondition initial;

  void Validate() const;
};

struct LogRecord {
  double t = 0.0;
  TractorState state;
  DriveMode mode = DriveMode::kThrottle;
  double u1 = 0.0;
  double u2 = 0.0;
  double u3 = 0.0;
  double drive_force = 0.0;
  HitchForce hitch_true;
  HitchForce hitch_measured;
  ReferenceSample ref;
  TrackingError error;
  double delta_psi = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double v1_rate_model = 0.0;
  double v2_rate_model = 0.0;
  bool steer_saturated = false;
  bool drive_saturated = false;
  bool fault = false;
  double max_hitch_angle = 0.0;  // largest |theta_{i-1} - theta_i|
  double e_p = 0.0;
};

// Signed path error: |e_p| = sqrt(x_e^2 + y_e^2), negative when the tractor
// is left of the reference (y_e > 0 in the Frenet frame).
double SignedPathError(const TrackingError& err);

struct SimSummary {
  bool completed = true;
  std::string abort_reason;
  double abort_time = 0.0;
  std::size_t steps = 0;
  TrackingError final_error;
  double final_delta_psi = 0.0;
  double final_abs_path_error = 0.0;
  double max_abs_path_error = 0.0;
  double max_abs_path_error_second_half = 0.0;
  std::size_t v2_increases = 0;              // > kV2IncreaseTolerance
  std::size_t v2_increases_unsaturated = 0;
  double saturation_fraction = 0.0;          // of physics steps
  std::size_t controller_faults = 0;
  std::size_t jackknife_warnings = 0;        // steps above the warning angle
};

inline constexpr double kV2IncreaseTolerance = 1e-6;

struct SimResult {
  std::vector<LogRecord> log;
  SimSummary summary;
};

// Closed-loop run. Plant errors (jack-knife, singular steering, leaving the
// propulsion map domain) stop the run; the partial log is kept and the
// summary records the abort. Deterministic for a given setup and seed.
SimResult RunClosedLoop(const SimulationSetup& setup);

enum class LyapunovFunction { kV1, kV2 };

struct AuditOptions {
  LyapunovFunction function = LyapunovFunction::kV2;
  double relative_tolerance = 1e-3;
  double increase_tolerance = kV2IncreaseTolerance;
  // |dV/dt| values below the floor are compared in absolute terms.
  double residual_floor = 1e-6;
  bool check_identity = true;
  // Allowed monotonicity violations outside saturated or faulted intervals.
  std::size_t max_unflagged_increases = 0;
};

struct AuditReport {
  std::size_t checked = 0;
  std::size_t skipped_flagged = 0;
  double max_relative_residual = 0.0;
  double time_of_max_residual = 0.0;
  std::size_t identity_violations = 0;
  std::size_t increases = 0;
  std::size_t increases_flagged = 0;
  std::size_t increases_unflagged = 0;
  bool passed = true;
};

// Compares the model rate of V1 or V2 recorded in the log with a
// five-point finite difference of the logged V and counts increases of V.
// Records within two samples of a saturated or faulted one are excluded from
// the identity check.
AuditReport LyapunovAudit(std::span<const LogRecord> log,
                          const AuditOptions& options);

// Fixed column order; see LogColumns(). mode is 0 for throttle and 1 for
// brake; the saturation and fault flags are 0 or 1.
inline constexpr std::size_t kLogColumnCount = 35;
const std::vector<std::string>& LogColumns();
std::array<double, kLogColumnCount> LogValues(const LogRecord& record);
void WriteLogCsv(const std::filesystem::path& path,
                 std::span<const LogRecord> log);
std::vector<LogRecord> ReadLogCsv(const std::filesystem::path& path);

void WriteSummary(const std::filesystem::path& path, const SimSummary& summary,
                  const AuditReport* audit);
std::string FormatSummary(const SimSummary& summary, const AuditReport* audit);

}  // namespace towtrack

#endif  // TOWTRACK_SIM_ENGINE_H_

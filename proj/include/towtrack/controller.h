#ifndef TOWTRACK_CONTROLLER_H_
#define TOWTRACK_CONTROLLER_H_

#include <optional>
#include <string>

#include "towtrack/powertrain.h"
#include "towtrack/trajectory.h"
#include "towtrack/vehicle_model.h"

namespace towtrack {

struct ControllerGains {
  double k_theta = 1.0;
  double k_v = 2.0;
  double k_psi = 5.0;

  void Validate() const;
};

// Posture and velocity error in the Frenet frame of the reference point.
struct TrackingError {
  double x_e = 0.0;
  double y_e = 0.0;
  double theta_e = 0.0;
  double v_e = 0.0;
};

struct BackstepState {
  double c_psi = 0.0;      // tan(psi) / L
  double delta_psi = 0.0;  // c_psi - omega1
};

struct VirtualControl {
  double omega1 = 0.0;  // desired c_psi [1/m]
  double omega2 = 0.0;  // desired drive force [N]
};

// Rates of the Frenet errors for a given speed and steering curvature.
struct ErrorRates {
  double x_e_dot = 0.0;
  double y_e_dot = 0.0;
  double theta_e_dot = 0.0;
};

// sin(t)/t, (1 - cos(t))/t and their derivatives in t.
struct SincTerms {
  double s1 = 1.0;
  double s2 = 0.0;
  double ds1 = 0.0;
  double ds2 = 0.5;
};

// Below this |theta_e| the sinc terms use their Taylor series.
inline constexpr double kTaylorSwitch = 1e-2;

SincTerms SincLike(double theta_e);

TrackingError ErrorTransform(const TractorState& state,
                             const ReferenceSample& ref);

// Inverse of ErrorTransform; psi is carried through unchanged.
TractorState ReconstructState(const TrackingError& err,
                              const ReferenceSample& ref, double psi);

ErrorRates ComputeErrorRates(const TrackingError& err,
                             const ReferenceSample& ref, double v_x,
                             double c_psi);

// omega1 alone; it does not depend on forces or powertrain.
double ComputeOmega1(const TrackingError& err, const ReferenceSample& ref,
                     const ControllerGains& gains);

// Virtual controls. With `hitch_compensation` false the measured-force terms
// (H_x and phi3 H_y) are dropped from omega2.
// Throws InvalidReferenceError unless v_d > 0 and phi2 > 0.
VirtualControl ComputeVirtualControl(const TrackingError& err,
                                     const ReferenceSample& ref,
                                     const HitchForce& hitch,
                                     const DynamicsCoefficients& coeffs,
                                     const ControllerGains& gains,
                                     bool hitch_compensation = true);

// Analytic total time derivative of omega1 along the error dynamics.
double Omega1Rate(const TrackingError& err, const ReferenceSample& ref,
                  const ControllerGains& gains, const ErrorRates& rates);

struct SteeringCommand {
  double u2 = 0.0;
  double nominal = 0.0;  // before clamping to +-psi_max
  bool saturated = false;
};

SteeringCommand SteeringLaw(const BackstepState& backstep, double omega1_dot,
                            const TrackingError& err, double v_x, double psi,
                            const TractorParams& params,
                            const ControllerGains& gains);

double LyapunovV1(const TrackingError& err);
double LyapunovV2(const TrackingError& err, double delta_psi);

// Closed-loop rates the proofs predict: -k_theta v_d theta_e^2 - k_v v_e^2,
// and additionally -k_psi delta_psi^2 for V2.
double LyapunovV1Rate(const TrackingError& err, const ReferenceSample& ref,
                      const ControllerGains& gains);
double LyapunovV2Rate(const TrackingError& err, const ReferenceSample& ref,
                      double delta_psi, const ControllerGains& gains);

// Where the steering rate used by phi1 comes from.
enum class SteeringRateSource {
  kPreviousCommand,  // (u2_prev - psi) / tau, no rate sensor needed
  kCurrentCommand,   // (u2 - psi) / tau with the command being issued
};

struct ControllerOptions {
  bool hitch_compensation = true;
  SteeringRateSource steering_rate = SteeringRateSource::kPreviousCommand;
};

struct ControlOutput {
  DriveCommand drive;
  SteeringCommand steering;
  TrackingError error;
  VirtualControl virtual_control;
  BackstepState backstep;
  double omega1_dot = 0.0;
  double psi_dot_estimate = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  // Set when a step failed; the command is then a safe stop.
  std::optional<std::string> fault;
};

// Full control cycle: error transform, virtual control, throttle/brake
// switch and backstepping steering law. Keeps the previous steering command
// as its only memory.
class TrackingController {
 public:
  TrackingController(const TractorParams& tractor, const PropulsionMap& map,
                     const BrakeParams& brake, const ControllerGains& gains,
                     const ControllerOptions& options = {});

  // Seeds the previous-command memory (defaults to the first psi seen).
  void Reset(std::optional<double> previous_u2 = std::nullopt);

  ControlOutput Step(const TractorState& state, const ReferenceSample& ref,
                     const HitchForce& measured);

  // Same computation without touching the memory.
  ControlOutput Evaluate(const TractorState& state, const ReferenceSample& ref,
                         const HitchForce& measured,
                         std::optional<double> previous_u2) const;

  const TractorParams& tractor() const { return tractor_; }
  const PropulsionMap& map() const { return map_; }
  const BrakeParams& brake() const { return brake_; }
  const ControllerGains& gains() const { return gains_; }
  const ControllerOptions& options() const { return options_; }

 private:
  TractorParams tractor_;
  PropulsionMap map_;
  BrakeParams brake_;
  ControllerGains gains_;
  ControllerOptions options_;
  std::optional<double> previous_u2_;
};

}  // namespace towtrack

#endif  // TOWTRACK_CONTROLLER_H_

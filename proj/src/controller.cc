#include "towtrack/controller.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "towtrack/errors.h"

namespace towtrack {

void ControllerGains::Validate() const {
  if (!(k_theta > 0.0)) throw ConfigError("gains: k_theta must be > 0");
  if (!(k_v > 0.0)) throw ConfigError("gains: k_v must be > 0");
  if (!(k_psi > 0.0)) throw ConfigError("gains: k_psi must be > 0");
}

SincTerms SincLike(double theta) {
  SincTerms s;
  if (std::abs(theta) < kTaylorSwitch) {
    const double t2 = theta * theta;
    s.s1 = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0));
    s.s2 = theta * (0.5 - t2 / 24.0 * (1.0 - t2 / 30.0));
    s.ds1 = theta * (-1.0 / 3.0 + t2 / 30.0 * (1.0 - t2 / 28.0));
    s.ds2 = 0.5 - t2 / 8.0 * (1.0 - t2 / 18.0);
    return s;
  }
  const double half_sin = std::sin(theta / 2.0);
  s.s1 = std::sin(theta) / theta;
  s.s2 = 2.0 * half_sin * half_sin / theta;
  s.ds1 = (std::cos(theta) - s.s1) / theta;
  s.ds2 = s.s1 - s.s2 / theta;
  return s;
}

TrackingError ErrorTransform(const TractorState& state,
                             const ReferenceSample& ref) {
  const double c = std::cos(ref.theta_d);
  const double s = std::sin(ref.theta_d);
  const double dx = state.x - ref.x_d;
  const double dy = state.y - ref.y_d;
  return {dx * c + dy * s, dy * c - dx * s, state.theta - ref.theta_d,
          state.v_x - ref.v_d};
}

TractorState ReconstructState(const TrackingError& err,
                              const ReferenceSample& ref, double psi) {
  const double c = std::cos(ref.theta_d);
  const double s = std::sin(ref.theta_d);
  TractorState state;
  state.x = ref.x_d + err.x_e * c - err.y_e * s;
  state.y = ref.y_d + err.x_e * s + err.y_e * c;
  state.theta = ref.theta_d + err.theta_e;
  state.v_x = ref.v_d + err.v_e;
  state.psi = psi;
  return state;
}

ErrorRates ComputeErrorRates(const TrackingError& err,
                             const ReferenceSample& ref, double v_x,
                             double c_psi) {
  ErrorRates r;
  r.x_e_dot = v_x * std::cos(err.theta_e) + ref.theta_d_dot * err.y_e - ref.v_d;
  r.y_e_dot = v_x * std::sin(err.theta_e) - ref.theta_d_dot * err.x_e;
  r.theta_e_dot = v_x * c_psi - ref.theta_d_dot;
  return r;
}

double ComputeOmega1(const TrackingError& err, const ReferenceSample& ref,
                     const ControllerGains& gains) {
  if (!(ref.v_d > 0.0)) {
    throw InvalidReferenceError(
        fmt::format("reference speed {} m/s must be positive", ref.v_d));
  }
  const SincTerms s = SincLike(err.theta_e);
  return err.x_e * s.s2 - err.y_e * s.s1 - gains.k_theta * err.theta_e +
         ref.theta_d_dot / ref.v_d;
}

VirtualControl ComputeVirtualControl(const TrackingError& err,
                                     const ReferenceSample& ref,
                                     const HitchForce& hitch,
                                     const DynamicsCoefficients& coeffs,
                                     const ControllerGains& gains,
                                     bool hitch_compensation) {
  if (!(coeffs.phi2 > 0.0)) {
    throw InvalidReferenceError("phi2 must be positive");
  }
  VirtualControl vc;
  vc.omega1 = ComputeOmega1(err, ref, gains);
  const double hx = hitch_compensation ? hitch.hx : 0.0;
  const double hy = hitch_compensation ? hitch.hy : 0.0;
  vc.omega2 = hx + (coeffs.phi3 * hy - coeffs.phi1 + ref.v_d_dot -
                    gains.k_v * err.v_e - err.x_e +
                    gains.k_theta * err.theta_e * err.theta_e -
                    ref.theta_d_dot / ref.v_d * err.theta_e) /
                       coeffs.phi2;
  return vc;
}

double Omega1Rate(const TrackingError& err, const ReferenceSample& ref,
                  const ControllerGains& gains, const ErrorRates& rates) {
  if (!(ref.v_d > 0.0)) {
    throw InvalidReferenceError(
        fmt::format("reference speed {} m/s must be positive", ref.v_d));
  }
  const SincTerms s = SincLike(err.theta_e);
  const double feedforward_rate =
      ref.theta_d_ddot / ref.v_d -
      ref.theta_d_dot * ref.v_d_dot / (ref.v_d * ref.v_d);
  return rates.x_e_dot * s.s2 + err.x_e * s.ds2 * rates.theta_e_dot -
         rates.y_e_dot * s.s1 - err.y_e * s.ds1 * rates.theta_e_dot -
         gains.k_theta * rates.theta_e_dot + feedforward_rate;
}

SteeringCommand SteeringLaw(const BackstepState& backstep, double omega1_dot,
                            const TrackingError& err, double v_x, double psi,
                            const TractorParams& params,
                            const ControllerGains& gains) {
  const double l = params.wheelbase();
  const double gain = 1.0 / l + l * backstep.c_psi * backstep.c_psi;
  SteeringCommand cmd;
  cmd.nominal = params.tau / gain *
                    (omega1_dot - v_x * err.theta_e -
                     gains.k_psi * backstep.delta_psi) +
                psi;
  cmd.u2 = std::clamp(cmd.nominal, -params.psi_max, params.psi_max);
  cmd.saturated = cmd.u2 != cmd.nominal;
  return cmd;
}

double LyapunovV1(const TrackingError& err) {
  return 0.5 * (err.x_e * err.x_e + err.y_e * err.y_e +
                err.theta_e * err.theta_e + err.v_e * err.v_e);
}

double LyapunovV2(const TrackingError& err, double delta_psi) {
  return LyapunovV1(err) + 0.5 * delta_psi * delta_psi;
}

double LyapunovV1Rate(const TrackingError& err, const ReferenceSample& ref,
                      const ControllerGains& gains) {
  return -gains.k_theta * ref.v_d * err.theta_e * err.theta_e -
         gains.k_v * err.v_e * err.v_e;
}

double LyapunovV2Rate(const TrackingError& err, const ReferenceSample& ref,
                      double delta_psi, const ControllerGains& gains) {
  return LyapunovV1Rate(err, ref, gains) - gains.k_psi * delta_psi * delta_psi;
}

TrackingController::TrackingController(const TractorParams& tractor,
                                       const PropulsionMap& map,
                                       const BrakeParams& brake,
                                       const ControllerGains& gains,
                                       const ControllerOptions& options)
    : tractor_(tractor), map_(map), brake_(brake), gains_(gains),
      options_(options) {
  tractor_.Validate();
  map_.Validate();
  brake_.Validate();
  gains_.Validate();
}

void TrackingController::Reset(std::optional<double> previous_u2) {
  previous_u2_ = previous_u2;
}

ControlOutput TrackingController::Step(const TractorState& state,
                                       const ReferenceSample& ref,
                                       const HitchForce& measured) {
  ControlOutput out = Evaluate(state, ref, measured, previous_u2_);
  previous_u2_ = out.steering.u2;
  return out;
}

ControlOutput TrackingController::Evaluate(
    const TractorState& state, const ReferenceSample& ref,
    const HitchForce& measured, std::optional<double> previous_u2) const {
  ControlOutput out;
  out.error = ErrorTransform(state, ref);
  out.v1 = LyapunovV1(out.error);
  out.v2 = out.v1;
  try {
    out.backstep.c_psi = SteeringCurvature(tractor_, state.psi);
    const double omega1 = ComputeOmega1(out.error, ref, gains_);
    out.backstep.delta_psi = out.backstep.c_psi - omega1;
    out.v2 = LyapunovV2(out.error, out.backstep.delta_psi);

    const ErrorRates rates =
        ComputeErrorRates(out.error, ref, state.v_x, out.backstep.c_psi);
    out.omega1_dot = Omega1Rate(out.error, ref, gains_, rates);
    out.steering = SteeringLaw(out.backstep, out.omega1_dot, out.error,
                               state.v_x, state.psi, tractor_, gains_);

    const double u2_for_rate =
        options_.steering_rate == SteeringRateSource::kPreviousCommand
            ? previous_u2.value_or(state.psi)
            : out.steering.u2;
    out.psi_dot_estimate = SteeringRate(tractor_, state.psi, u2_for_rate);

    const DynamicsCoefficients coeffs = ComputeCoefficients(
        tractor_, state.psi, out.psi_dot_estimate, state.v_x);
    out.virtual_control =
        ComputeVirtualControl(out.error, ref, measured, coeffs, gains_,
                              options_.hitch_compensation);
    out.drive = SelectDriveActuation(out.virtual_control.omega2, map_, brake_,
                                     state.v_x);
  } catch (const Error& e) {
    out.fault = e.what();
    out.steering = {state.psi, state.psi, false};
    out.drive = {};
    out.drive.mode = DriveMode::kBrake;
    out.drive.u3 = brake_.u3_max / 2.0;
    out.drive.drive_force = out.drive.u3 * brake_.ratio;
  }
  return out;
}

}  // namespace towtrack

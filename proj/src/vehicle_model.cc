#include "towtrack/vehicle_model.h"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "towtrack/errors.h"

namespace towtrack {

namespace {

void CheckSteering(double psi) {
  if (!(std::abs(psi) < std::numbers::pi / 2.0 - kSteerSingularityGuard)) {
    throw SingularSteeringError(
        fmt::format("steering angle {} rad is too close to pi/2", psi));
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("tractor: ") + what);
}

}  // namespace

void TractorParams::Validate() const {
  Require(mass > 0.0, "mass must be > 0");
  Require(yaw_inertia > 0.0, "yaw_inertia must be > 0");
  Require(a > 0.0, "a must be > 0");
  Require(b > 0.0, "b must be > 0");
  Require(c >= 0.0, "c must be >= 0");
  Require(tau > 0.0, "tau must be > 0");
  Require(psi_max > 0.0 && psi_max < std::numbers::pi / 2.0,
          "psi_max must lie in (0, pi/2)");
}

DynamicsCoefficients ComputeCoefficients(const TractorParams& params,
                                         double psi, double psi_dot,
                                         double v_x) {
  CheckSteering(psi);
  const double l = params.wheelbase();
  const double rear_inertia =
      params.mass * params.b * params.b + params.yaw_inertia;
  const double cos_psi = std::cos(psi);
  const double sin_psi = std::sin(psi);
  const double tan_psi = std::tan(psi);

  DynamicsCoefficients k;
  k.z = cos_psi * cos_psi * (l * l * params.mass + rear_inertia * tan_psi * tan_psi);
  k.phi1 = -rear_inertia * tan_psi * psi_dot * v_x / k.z;
  k.phi2 = l * l * cos_psi * cos_psi / k.z;
  k.phi3 = l * l * params.c * sin_psi * cos_psi / k.z;
  return k;
}

StateRate StateDerivative(const TractorParams& params,
                          const TractorState& state, double drive_force,
                          const HitchForce& hitch, double psi_dot) {
  const DynamicsCoefficients k =
      ComputeCoefficients(params, state.psi, psi_dot, state.v_x);
  StateRate rate;
  rate.x_dot = state.v_x * std::cos(state.theta);
  rate.y_dot = state.v_x * std::sin(state.theta);
  rate.theta_dot = state.v_x * std::tan(state.psi) / params.wheelbase();
  rate.v_x_dot = k.phi1 + k.phi2 * (drive_force - hitch.hx) - k.phi3 * hitch.hy;
  return rate;
}

double SteeringRate(const TractorParams& params, double psi, double u2) {
  return (u2 - psi) / params.tau;
}

double SteeringCurvature(const TractorParams& params, double psi) {
  CheckSteering(psi);
  return std::tan(psi) / params.wheelbase();
}

std::pair<double, double> ConstraintResiduals(const TractorParams& params,
                                              const TractorState& state,
                                              const StateRate& rate) {
  const double cos_th = std::cos(state.theta);
  const double sin_th = std::sin(state.theta);
  // COG velocity from the rear-axle point: p_g = p + b (cos theta, sin theta).
  const double xg_dot = rate.x_dot - params.b * sin_th * rate.theta_dot;
  const double yg_dot = rate.y_dot + params.b * cos_th * rate.theta_dot;

  const double rear = yg_dot * cos_th - xg_dot * sin_th - params.b * rate.theta_dot;
  const double heading = state.theta + state.psi;
  const double front = yg_dot * std::cos(heading) - xg_dot * std::sin(heading) +
                       params.a * rate.theta_dot * std::cos(state.psi);
  return {rear, front};
}

}  // namespace towtrack

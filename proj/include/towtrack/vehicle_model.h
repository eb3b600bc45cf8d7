#ifndef TOWTRACK_VEHICLE_MODEL_H_
#define TOWTRACK_VEHICLE_MODEL_H_

#include <utility>

namespace towtrack {

// Steering angles within this distance of pi/2 are rejected as singular.
inline constexpr double kSteerSingularityGuard = 1e-3;

// Physical constants of the car-like tractor (one-track model).
//
// The wheelbase is not stored separately: it is always a + b.
struct TractorParams {
  double mass = 3000.0;          // [kg]
  double yaw_inertia = 4000.0;   // [kg m^2]
  double a = 1.0;                // COG to front axle [m]
  double b = 1.0;                // COG to rear axle [m]
  double c = 0.5;                // rear axle to hitch sensor [m]
  double tau = 0.2;              // steering lag time constant [s]
  double psi_max = 0.55;         // steering saturation [rad]

  double wheelbase() const { return a + b; }

  // Throws ConfigError when an invariant is violated.
  void Validate() const;
};

// Pose of the rear-axle midpoint, longitudinal speed and steering angle.
// theta is never wrapped.
struct TractorState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v_x = 0.0;
  double psi = 0.0;
};

// Planar force the trailer chain exerts on the tractor at the hitch.
// hx > 0 resists forward motion; hy > 0 pushes towards the tractor's left.
struct HitchForce {
  double hx = 0.0;
  double hy = 0.0;
};

inline constexpr double kHitchSensorRange = 50000.0;  // [N]

struct DynamicsCoefficients {
  double phi1 = 0.0;  // [m/s^2]
  double phi2 = 0.0;  // [1/kg]
  double phi3 = 0.0;  // [1/kg]
  double z = 0.0;
};

struct StateRate {
  double x_dot = 0.0;
  double y_dot = 0.0;
  double theta_dot = 0.0;
  double v_x_dot = 0.0;
};

// Coefficients of the reduced longitudinal dynamics
//   v_x' = phi1 + phi2 (F_d - H_x) - phi3 H_y.
// Throws SingularSteeringError if |psi| >= pi/2 - kSteerSingularityGuard.
DynamicsCoefficients ComputeCoefficients(const TractorParams& params,
                                         double psi, double psi_dot,
                                         double v_x);

// Rates of (x, y, theta, v_x) of the rear-axle point for drive force
// `drive_force`, hitch load `hitch` and steering rate `psi_dot`.
StateRate StateDerivative(const TractorParams& params,
                          const TractorState& state, double drive_force,
                          const HitchForce& hitch, double psi_dot);

// First-order steering actuator lag.
double SteeringRate(const TractorParams& params, double psi, double u2);

// Curvature-like steering state tan(psi) / L.
double SteeringCurvature(const TractorParams& params, double psi);

// Left-minus-right residuals of the rear and front wheel no-slip
// constraints, evaluated at the COG reconstructed from the rear-axle point.
std::pair<double, double> ConstraintResiduals(const TractorParams& params,
                                              const TractorState& state,
                                              const StateRate& rate);

}  // namespace towtrack

#endif  // TOWTRACK_VEHICLE_MODEL_H_

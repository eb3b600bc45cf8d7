#ifndef TOWTRACK_TRAJECTORY_H_
#define TOWTRACK_TRAJECTORY_H_

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "towtrack/vehicle_model.h"

namespace towtrack {

// Desired rear-axle motion at one instant, with the first and second time
// derivatives of heading and speed needed by the steering law.
struct ReferenceSample {
  double x_d = 0.0;
  double y_d = 0.0;
  double theta_d = 0.0;  // unwrapped
  double v_d = 0.0;
  double theta_d_dot = 0.0;
  double v_d_dot = 0.0;
  double theta_d_ddot = 0.0;
  double v_d_ddot = 0.0;
};

inline constexpr double kMinReferenceSpeed = 1e-3;  // [m/s]

// Speed that blends from `initial` to `final` over
// [ramp_start, ramp_start + ramp_duration] with a quintic smoothstep, so the
// speed is C2 in time. A zero duration means constant `initial` speed.
struct SpeedProfile {
  double initial = 1.0;
  double final = 1.0;
  double ramp_start = 0.0;
  double ramp_duration = 0.0;

  static SpeedProfile Constant(double v) { return {v, v, 0.0, 0.0}; }

  void Validate() const;

  // Arc length, speed, acceleration and jerk at time t >= 0.
  std::array<double, 4> Evaluate(double t) const;
};

class Trajectory {
 public:
  virtual ~Trajectory() = default;

  // Throws DomainError for t < 0 or beyond the horizon of tabulated data.
  virtual ReferenceSample Sample(double t) const = 0;

  // Signed path curvature at time t (piecewise constant for generators).
  virtual double Curvature(double t) const = 0;
};

enum class TrajectoryKind { kLine, kCircle, kFigureEight, kSCurve };

struct GeneratorSpec {
  TrajectoryKind kind = TrajectoryKind::kCircle;
  double radius = 10.0;         // circle, figure-eight lobe, s-curve arcs [m]
  bool clockwise = false;       // circle only
  double turn_angle = 0.7853981633974483;  // s-curve arc sweep [rad]
  double lead_length = 10.0;    // s-curve straight before the first arc [m]
  double heading = 0.0;         // initial heading [rad]
  double x0 = 0.0;
  double y0 = 0.0;
  SpeedProfile speed;
};

TrajectoryKind ParseTrajectoryKind(const std::string& name);
std::string TrajectoryKindName(TrajectoryKind kind);

// Smallest radius the tractor can follow: L / tan(psi_max).
double MinimumTurningRadius(const TractorParams& tractor);

// Throws InfeasibleTrajectoryError when a radius is below the minimum
// turning radius and ConfigError for invalid speed profiles.
std::shared_ptr<const Trajectory> MakeGenerator(const GeneratorSpec& spec,
                                                const TractorParams& tractor);

// Trajectory from a `t,x,y` CSV. Velocity and its derivatives come from a
// local least-squares cubic (Savitzky-Golay style) over
// kTabulatedWindow samples centred on the nearest sample; the window is
// shifted inwards at the ends of the table.
inline constexpr int kTabulatedWindow = 7;
std::shared_ptr<const Trajectory> LoadTrajectoryCsv(
    const std::filesystem::path& path);

struct TrajectoryRow {
  double t, x, y, theta, v;
};

// Samples `trajectory` on [0, duration] every 1/rate seconds, both ends
// included.
std::vector<TrajectoryRow> SampleTrajectory(const Trajectory& trajectory,
                                            double duration, double rate);

void WriteTrajectoryCsv(const std::filesystem::path& path,
                        const std::vector<TrajectoryRow>& rows);

}  // namespace towtrack

#endif  // TOWTRACK_TRAJECTORY_H_

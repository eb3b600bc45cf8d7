#include "towtrack/sim_engine.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "towtrack/csv.h"
#include "towtrack/errors.h"

namespace towtrack {

namespace {

PlantState Offset(const PlantState& s, const PlantRates& r, double h) {
  PlantState out = s;
  out.tractor.x += h * r.tractor.x_dot;
  out.tractor.y += h * r.tractor.y_dot;
  out.tractor.theta += h * r.tractor.theta_dot;
  out.tractor.v_x += h * r.tractor.v_x_dot;
  out.tractor.psi += h * r.psi_dot;
  for (std::size_t i = 0; i < out.chain.headings.size(); ++i) {
    out.chain.headings[i] += h * r.trailer_yaw_rates[i];
  }
  return out;
}

// Classical RK4 where `rates(t, state)` may re-evaluate the inputs.
template <typename RatesFn>
PlantState Rk4(RatesFn&& rates, const PlantState& s, double t, double dt) {
  const PlantRates k1 = rates(t, s);
  const PlantRates k2 = rates(t + dt / 2.0, Offset(s, k1, dt / 2.0));
  const PlantRates k3 = rates(t + dt / 2.0, Offset(s, k2, dt / 2.0));
  const PlantRates k4 = rates(t + dt, Offset(s, k3, dt));
  auto blend = [](double a, double b, double c, double d) {
    return (a + 2.0 * b + 2.0 * c + d) / 6.0;
  };
  PlantRates avg;
  avg.tractor.x_dot = blend(k1.tractor.x_dot, k2.tractor.x_dot, k3.tractor.x_dot,
                            k4.tractor.x_dot);
  avg.tractor.y_dot = blend(k1.tractor.y_dot, k2.tractor.y_dot, k3.tractor.y_dot,
                            k4.tractor.y_dot);
  avg.tractor.theta_dot =
      blend(k1.tractor.theta_dot, k2.tractor.theta_dot, k3.tractor.theta_dot,
            k4.tractor.theta_dot);
  avg.tractor.v_x_dot = blend(k1.tractor.v_x_dot, k2.tractor.v_x_dot,
                              k3.tractor.v_x_dot, k4.tractor.v_x_dot);
  avg.psi_dot = blend(k1.psi_dot, k2.psi_dot, k3.psi_dot, k4.psi_dot);
  avg.trailer_yaw_rates.resize(k1.trailer_yaw_rates.size());
  for (std::size_t i = 0; i < avg.trailer_yaw_rates.size(); ++i) {
    avg.trailer_yaw_rates[i] =
        blend(k1.trailer_yaw_rates[i], k2.trailer_yaw_rates[i],
              k3.trailer_yaw_rates[i], k4.trailer_yaw_rates[i]);
  }
  return Offset(s, avg, dt);
}

HitchForce TimeOnlyHitch(const PlantModel& plant, double t) {
  if (plant.force_source == ForceSource::kReplay) {
    return ReplayForce(plant.replay, t);
  }
  return {};
}

// Ideal actuation evaluates the virtual controls with the steering angle
// that realizes omega1 and zero steering rate, matching the plant.
VirtualControl IdealVirtualControl(const SimulationSetup& setup,
                                   const TractorState& state,
                                   const ReferenceSample& ref,
                                   const HitchForce& hitch) {
  const TrackingError err = ErrorTransform(state, ref);
  const double omega1 = ComputeOmega1(err, ref, setup.gains);
  const double psi = std::atan(setup.plant.tractor.wheelbase() * omega1);
  const DynamicsCoefficients coeffs =
      ComputeCoefficients(setup.plant.tractor, psi, 0.0, state.v_x);
  return ComputeVirtualControl(err, ref, hitch, coeffs, setup.gains,
                               setup.controller.hitch_compensation);
}

PlantInputs InputsFrom(const ControlOutput& out) {
  PlantInputs in;
  in.actuation = ActuationModel::kBackstepping;
  in.drive = out.drive;
  in.u2 = out.steering.u2;
  return in;
}

PlantInputs IdealInputs(const VirtualControl& vc) {
  PlantInputs in;
  in.actuation = ActuationModel::kIdeal;
  in.curvature = vc.omega1;
  in.drive_force = vc.omega2;
  return in;
}

double MaxHitchAngle(const PlantState& s) {
  double worst = 0.0;
  for (double g : HitchAngles(s.tractor.theta, s.chain)) {
    worst = std::max(worst, std::abs(g));
  }
  return worst;
}

std::string Bool(bool b) { return b ? "true" : "false"; }

}  // namespace

void PlantModel::Validate() const {
  tractor.Validate();
  map.Validate();
  brake.Validate();
  for (const auto& t : trailers) t.Validate();
  if (!trailers.empty() && trailers.front().hitch_offset != tractor.c) {
    throw ConfigError(fmt::format(
        "trailers[0].hitch_offset ({}) must equal tractor.c ({})",
        trailers.front().hitch_offset, tractor.c));
  }
  if (force_source == ForceSource::kReplay && replay.empty()) {
    throw ConfigError("force provider 'replay' needs a force profile");
  }
  if (force_source == ForceSource::kChain && trailers.empty()) {
    throw ConfigError("force provider 'chain' needs at least one trailer");
  }
}

PlantRates PlantDerivative(const PlantModel& plant, const PlantState& state,
                           const PlantInputs& inputs, double t) {
  const TractorParams& tr = plant.tractor;
  const TractorState& s = state.tractor;
  const double l = tr.wheelbase();

  double curvature = 0.0;
  double psi_eff = 0.0;
  double psi_dot = 0.0;
  double curvature_dot = 0.0;
  double force = 0.0;
  if (inputs.actuation == ActuationModel::kIdeal) {
    curvature = inputs.curvature;
    psi_eff = std::atan(l * curvature);
    force = inputs.drive_force;
  } else {
    psi_eff = s.psi;
    psi_dot = SteeringRate(tr, s.psi, inputs.u2);
    curvature = SteeringCurvature(tr, s.psi);
    curvature_dot = (1.0 / l + l * curvature * curvature) * psi_dot;
    force = RealizedDriveForce(inputs.drive, plant.map, plant.brake, s.v_x);
  }
  const DynamicsCoefficients k = ComputeCoefficients(tr, psi_eff, psi_dot, s.v_x);

  PlantRates r;
  r.psi_dot = psi_dot;
  r.drive_force = force;
  r.tractor.x_dot = s.v_x * std::cos(s.theta);
  r.tractor.y_dot = s.v_x * std::sin(s.theta);
  r.tractor.theta_dot = s.v_x * curvature;

  BodyMotion tractor_motion;
  tractor_motion.heading = s.theta;
  tractor_motion.speed = s.v_x;
  tractor_motion.yaw_rate = r.tractor.theta_dot;

  if (plant.force_source == ForceSource::kChain) {
    auto hitch_at = [&](double accel) {
      BodyMotion m = tractor_motion;
      m.accel = accel;
      m.yaw_accel = accel * curvature + s.v_x * curvature_dot;
      return QuasiStaticHitchForce(m, state.chain, plant.trailers);
    };
    const HitchForce h0 = hitch_at(0.0);
    const HitchForce h1 = hitch_at(1.0);
    const double sx = h1.hx - h0.hx;
    const double sy = h1.hy - h0.hy;
    const double accel = (k.phi1 + k.phi2 * (force - h0.hx) - k.phi3 * h0.hy) /
                         (1.0 + k.phi2 * sx + k.phi3 * sy);
    r.tractor.v_x_dot = accel;
    r.hitch = {h0.hx + accel * sx, h0.hy + accel * sy};
  } else {
    r.hitch = TimeOnlyHitch(plant, t);
    r.tractor.v_x_dot =
        k.phi1 + k.phi2 * (force - r.hitch.hx) - k.phi3 * r.hitch.hy;
  }

  if (!plant.trailers.empty()) {
    const auto motion = ChainKinematics(tractor_motion, state.chain, plant.trailers);
    r.trailer_yaw_rates.resize(motion.size());
    for (std::size_t i = 0; i < motion.size(); ++i) {
      r.trailer_yaw_rates[i] = motion[i].yaw_rate;
    }
  }
  return r;
}

PlantState IntegrateStep(const PlantModel& plant, const PlantState& state,
                         const PlantInputs& inputs, double t, double dt) {
  if (!(dt > 0.0)) throw DomainError("integration step must be positive");
  return Rk4(
      [&](double ts, const PlantState& xs) {
        return PlantDerivative(plant, xs, inputs, ts);
      },
      state, t, dt);
}

void SimConfig::Validate() const {
  if (!(dt_physics > 0.0)) throw ConfigError("sim: dt_physics must be > 0");
  if (!(duration > 0.0)) throw ConfigError("sim: duration must be > 0");
  if (log_decimation < 1) throw ConfigError("sim: log_decimation must be >= 1");
  ControlRatio();
}

int SimConfig::ControlRatio() const {
  const double ratio = dt_control / dt_physics;
  const double rounded = std::round(ratio);
  if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ConfigError(fmt::format(
        "sim: dt_control ({}) must be an integer multiple of dt_physics ({})",
        dt_control, dt_physics));
  }
  return static_cast<int>(rounded);
}

void SimulationSetup::Validate() const {
  plant.Validate();
  if (!trajectory) throw ConfigError("simulation has no trajectory");
  gains.Validate();
  sensor.Validate();
  sim.Validate();
  if (sim.timing == ControlTiming::kContinuous &&
      plant.force_source == ForceSource::kChain) {
    throw ConfigError(
        "continuous control timing needs force provider 'none' or 'replay'");
  }
  if (!initial.hitch_angles.empty() &&
      initial.hitch_angles.size() != plant.trailers.size()) {
    throw ConfigError(fmt::format("initial hitch angles: {} given for {} trailers",
                                  initial.hitch_angles.size(),
                                  plant.trailers.size()));
  }
}

double SignedPathError(const TrackingError& err) {
  const double magnitude = std::hypot(err.x_e, err.y_e);
  return err.y_e > 0.0 ? -magnitude : magnitude;
}

SimResult RunClosedLoop(const SimulationSetup& setup) {
  setup.Validate();
  const PlantModel& plant = setup.plant;
  const SimConfig& cfg = setup.sim;
  const Trajectory& trajectory = *setup.trajectory;
  const bool ideal = cfg.actuation == ActuationModel::kIdeal;
  const bool continuous = cfg.timing == ControlTiming::kContinuous;
  const double l = plant.tractor.wheelbase();

  ControllerOptions options = setup.controller;
  if (continuous) options.steering_rate = SteeringRateSource::kCurrentCommand;
  TrackingController controller(plant.tractor, plant.map, plant.brake,
                                setup.gains, options);
  ForceSensor sensor(setup.sensor, cfg.seed);

  PlantState state;
  const ReferenceSample ref0 = trajectory.Sample(0.0);
  state.tractor = setup.initial.state.value_or(
      ReconstructState(setup.initial.error, ref0, setup.initial.psi));
  {
    double ahead = state.tractor.theta;
    for (std::size_t i = 0; i < plant.trailers.size(); ++i) {
      const double gamma =
          setup.initial.hitch_angles.empty() ? 0.0 : setup.initial.hitch_angles[i];
      ahead -= gamma;
      state.chain.headings.push_back(ahead);
    }
  }

  const int ratio = cfg.ControlRatio();
  const auto steps =
      static_cast<std::size_t>(std::llround(cfg.duration / cfg.dt_physics));
  SimResult result;
  SimSummary& summary = result.summary;
  result.log.reserve(steps / static_cast<std::size_t>(cfg.log_decimation) + 2);

  PlantInputs held;
  held.actuation = cfg.actuation;
  held.u2 = state.tractor.psi;
  ControlOutput last;
  VirtualControl last_vc;
  HitchForce measured;
  std::size_t saturated_steps = 0;

  // Continuous-timing control law as a function of (t, state).
  auto continuous_inputs = [&](double t, const PlantState& s) {
    const ReferenceSample ref = trajectory.Sample(t);
    const HitchForce hitch = TimeOnlyHitch(plant, t);
    if (ideal) return IdealInputs(IdealVirtualControl(setup, s.tractor, ref, hitch));
    return InputsFrom(controller.Evaluate(s.tractor, ref, hitch, std::nullopt));
  };

  std::size_t k = 0;
  double t = 0.0;
  try {
    for (k = 0; k <= steps; ++k) {
      t = static_cast<double>(k) * cfg.dt_physics;
      const ReferenceSample ref = trajectory.Sample(t);

      if (continuous) {
        const HitchForce hitch = TimeOnlyHitch(plant, t);
        measured = hitch;
        if (ideal) {
          last_vc = IdealVirtualControl(setup, state.tractor, ref, hitch);
          held = IdealInputs(last_vc);
          state.tractor.psi = std::atan(l * last_vc.omega1);
          last = {};
        } else {
          last = controller.Evaluate(state.tractor, ref, hitch, std::nullopt);
          last_vc = last.virtual_control;
          held = InputsFrom(last);
        }
      } else if (k % static_cast<std::size_t>(ratio) == 0) {
        const HitchForce truth = PlantDerivative(plant, state, held, t).hitch;
        measured = sensor.Measure(truth, t);
        if (ideal) {
          last_vc = IdealVirtualControl(setup, state.tractor, ref, measured);
          held = IdealInputs(last_vc);
          state.tractor.psi = std::atan(l * last_vc.omega1);
          last = {};
        } else {
          last = controller.Step(state.tractor, ref, measured);
          last_vc = last.virtual_control;
          held = InputsFrom(last);
        }
        if (last.fault) ++summary.controller_faults;
      }

      const bool saturated =
          !ideal && (last.steering.saturated || last.drive.saturated);
      const double hitch_angle = MaxHitchAngle(state);
      if (hitch_angle > kJackKnifeWarningAngle) ++summary.jackknife_warnings;

      if (k % static_cast<std::size_t>(cfg.log_decimation) == 0 || k == steps) {
        const PlantRates rates = PlantDerivative(plant, state, held, t);
        LogRecord rec;
        rec.t = t;
        rec.state = state.tractor;
        rec.ref = ref;
        rec.error = ErrorTransform(state.tractor, ref);
        rec.hitch_true = rates.hitch;
        rec.hitch_measured = measured;
        rec.drive_force = rates.drive_force;
        rec.omega1 = ComputeOmega1(rec.error, ref, setup.gains);
        rec.omega2 = last_vc.omega2;
        if (ideal) {
          rec.mode = last_vc.omega2 >= 0.0 ? DriveMode::kThrottle : DriveMode::kBrake;
          rec.u2 = state.tractor.psi;
          rec.delta_psi = held.curvature - rec.omega1;
        } else {
          rec.mode = last.drive.mode;
          rec.u1 = last.drive.u1;
          rec.u2 = last.steering.u2;
          rec.u3 = last.drive.u3;
          rec.delta_psi = SteeringCurvature(plant.tractor, state.tractor.psi) -
                          rec.omega1;
          rec.steer_saturated = last.steering.saturated;
          rec.drive_saturated = last.drive.saturated;
          rec.fault = last.fault.has_value();
        }
        rec.v1 = LyapunovV1(rec.error);
        rec.v2 = LyapunovV2(rec.error, rec.delta_psi);
        rec.v1_rate_model = LyapunovV1Rate(rec.error, ref, setup.gains);
        rec.v2_rate_model =
            LyapunovV2Rate(rec.error, ref, rec.delta_psi, setup.gains);
        rec.max_hitch_angle = hitch_angle;
        rec.e_p = SignedPathError(rec.error);
        result.log.push_back(rec);
      }
      if (k == steps) break;

      if (saturated) ++saturated_steps;
      if (continuous) {
        state = Rk4(
            [&](double ts, const PlantState& xs) {
              return PlantDerivative(plant, xs, continuous_inputs(ts, xs), ts);
            },
            state, t, cfg.dt_physics);
      } else {
        state = IntegrateStep(plant, state, held, t, cfg.dt_physics);
      }
    }
  } catch (const Error& e) {
    summary.completed = false;
    summary.abort_reason = e.what();
    summary.abort_time = t;
  }

  summary.steps = std::min(k, steps);
  summary.saturation_fraction =
      summary.steps == 0 ? 0.0
                         : static_cast<double>(saturated_steps) /
                               static_cast<double>(summary.steps);
  const double half_time = cfg.duration / 2.0;
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const LogRecord& rec = result.log[i];
    const double ep = std::abs(rec.e_p);
    summary.max_abs_path_error = std::max(summary.max_abs_path_error, ep);
    if (rec.t >= half_time) {
      summary.max_abs_path_error_second_half =
          std::max(summary.max_abs_path_error_second_half, ep);
    }
    if (i > 0 && rec.v2 - result.log[i - 1].v2 > kV2IncreaseTolerance) {
      ++summary.v2_increases;
      const LogRecord& prev = result.log[i - 1];
      const bool flagged = rec.steer_saturated || rec.drive_saturated ||
                           prev.steer_saturated || prev.drive_saturated ||
                           rec.fault || prev.fault;
      if (!flagged) ++summary.v2_increases_unsaturated;
    }
  }
  if (!result.log.empty()) {
    const LogRecord& last_rec = result.log.back();
    summary.final_error = last_rec.error;
    summary.final_delta_psi = last_rec.delta_psi;
    summary.final_abs_path_error = std::abs(last_rec.e_p);
  }
  return result;
}

AuditReport LyapunovAudit(std::span<const LogRecord> log,
                          const AuditOptions& options) {
  const bool use_v2 = options.function == LyapunovFunction::kV2;
  auto value = [&](const LogRecord& r) { return use_v2 ? r.v2 : r.v1; };
  auto model_rate = [&](const LogRecord& r) {
    return use_v2 ? r.v2_rate_model : r.v1_rate_model;
  };
  auto flagged = [](const LogRecord& r) {
    return r.steer_saturated || r.drive_saturated || r.fault;
  };

  AuditReport report;
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (value(log[i]) - value(log[i - 1]) > options.increase_tolerance) {
      ++report.increases;
      if (flagged(log[i]) || flagged(log[i - 1])) {
        ++report.increases_flagged;
      } else {
        ++report.increases_unflagged;
      }
    }
  }
  if (options.check_identity) {
    for (std::size_t i = 2; i + 2 < log.size(); ++i) {
      bool skip = false;
      for (std::size_t j = i - 2; j <= i + 2; ++j) skip = skip || flagged(log[j]);
      if (skip) {
        ++report.skipped_flagged;
        continue;
      }
      const double h = log[i + 1].t - log[i].t;
      bool uniform = true;
      for (std::size_t j = i - 1; j <= i + 2; ++j) {
        uniform = uniform && std::abs(log[j].t - log[j - 1].t - h) <= 1e-9 * h;
      }
      // Fourth-order stencil on a uniform grid, central difference otherwise.
      const double fd =
          uniform ? (value(log[i - 2]) - 8.0 * value(log[i - 1]) +
                     8.0 * value(log[i + 1]) - value(log[i + 2])) /
                        (12.0 * h)
                  : (value(log[i + 1]) - value(log[i - 1])) /
                        (log[i + 1].t - log[i - 1].t);
      const double model = model_rate(log[i]);
      const double residual =
          std::abs(fd - model) / std::max(std::abs(model), options.residual_floor);
      ++report.checked;
      if (residual > report.max_relative_residual) {
        report.max_relative_residual = residual;
        report.time_of_max_residual = log[i].t;
      }
      if (residual >= options.relative_tolerance) ++report.identity_violations;
    }
  }
  report.passed = report.identity_violations == 0 &&
                  report.increases_unflagged <= options.max_unflagged_increases;
  return report;
}

const std::vector<std::string>& LogColumns() {
  static const std::vector<std::string> columns = {
      "t",        "x",          "y",          "theta",     "v_x",
      "psi",      "mode",       "u1",         "u2",        "u3",
      "F_d",      "Hx_true",    "Hy_true",    "Hx_meas",   "Hy_meas",
      "x_d",      "y_d",        "theta_d",    "v_d",       "x_e",
      "y_e",      "theta_e",    "v_e",        "delta_psi", "omega1",
      "omega2",   "V1",         "V2",         "V1_dot_model", "V2_dot_model",
      "sat_steer", "sat_drive", "fault",      "max_hitch_angle", "e_p"};
  return columns;
}

std::array<double, kLogColumnCount> LogValues(const LogRecord& r) {
  return {r.t, r.state.x, r.state.y, r.state.theta, r.state.v_x, r.state.psi,
          r.mode == DriveMode::kBrake ? 1.0 : 0.0, r.u1, r.u2, r.u3,
          r.drive_force, r.hitch_true.hx, r.hitch_true.hy, r.hitch_measured.hx,
          r.hitch_measured.hy, r.ref.x_d, r.ref.y_d, r.ref.theta_d, r.ref.v_d,
          r.error.x_e, r.error.y_e, r.error.theta_e, r.error.v_e, r.delta_psi,
          r.omega1, r.omega2, r.v1, r.v2, r.v1_rate_model, r.v2_rate_model,
          r.steer_saturated ? 1.0 : 0.0, r.drive_saturated ? 1.0 : 0.0,
          r.fault ? 1.0 : 0.0, r.max_hitch_angle, r.e_p};
}

void WriteLogCsv(const std::filesystem::path& path,
                 std::span<const LogRecord> log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  const auto& cols = LogColumns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << (i ? "," : "") << cols[i];
  }
  out << '\n';
  fmt::memory_buffer buf;
  for (const auto& r : log) {
    buf.clear();
    const auto values = LogValues(r);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) buf.push_back(',');
      fmt::format_to(std::back_inserter(buf), "{:.17g}", values[i]);
    }
    buf.push_back('\n');
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

std::vector<LogRecord> ReadLogCsv(const std::filesystem::path& path) {
  const CsvTable table = ReadNumericCsv(path, LogColumns());
  std::vector<LogRecord> log;
  log.reserve(table.rows.size());
  for (const auto& v : table.rows) {
    LogRecord r;
    r.t = v[0];
    r.state = {v[1], v[2], v[3], v[4], v[5]};
    r.mode = v[6] != 0.0 ? DriveMode::kBrake : DriveMode::kThrottle;
    r.u1 = v[7];
    r.u2 = v[8];
    r.u3 = v[9];
    r.drive_force = v[10];
    r.hitch_true = {v[11], v[12]};
    r.hitch_measured = {v[13], v[14]};
    r.ref.x_d = v[15];
    r.ref.y_d = v[16];
    r.ref.theta_d = v[17];
    r.ref.v_d = v[18];
    r.error = {v[19], v[20], v[21], v[22]};
    r.delta_psi = v[23];
    r.omega1 = v[24];
    r.omega2 = v[25];
    r.v1 = v[26];
    r.v2 = v[27];
    r.v1_rate_model = v[28];
    r.v2_rate_model = v[29];
    r.steer_saturated = v[30] != 0.0;
    r.drive_saturated = v[31] != 0.0;
    r.fault = v[32] != 0.0;
    r.max_hitch_angle = v[33];
    r.e_p = v[34];
    log.push_back(r);
  }
  return log;
}

std::string FormatSummary(const SimSummary& s, const AuditReport* audit) {
  std::string out;
  auto line = [&out](std::string_view key, const auto& value) {
    out += fmt::format("{}: {}\n", key, value);
  };
  line("completed", Bool(s.completed));
  line("abort_reason", fmt::format("\"{}\"", s.abort_reason));
  line("abort_time", fmt::format("{:.6g}", s.abort_time));
  line("steps", s.steps);
  line("final_x_e", fmt::format("{:.6g}", s.final_error.x_e));
  line("final_y_e", fmt::format("{:.6g}", s.final_error.y_e));
  line("final_theta_e", fmt::format("{:.6g}", s.final_error.theta_e));
  line("final_v_e", fmt::format("{:.6g}", s.final_error.v_e));
  line("final_delta_psi", fmt::format("{:.6g}", s.final_delta_psi));
  line("final_abs_path_error", fmt::format("{:.6g}", s.final_abs_path_error));
  line("max_abs_path_error", fmt::format("{:.6g}", s.max_abs_path_error));
  line("max_abs_path_error_second_half",
       fmt::format("{:.6g}", s.max_abs_path_error_second_half));
  line("v2_increases", s.v2_increases);
  line("v2_increases_unsaturated", s.v2_increases_unsaturated);
  line("saturation_fraction", fmt::format("{:.6g}", s.saturation_fraction));
  line("controller_faults", s.controller_faults);
  line("jackknife_warnings", s.jackknife_warnings);
  if (audit != nullptr) {
    out += "audit:\n";
    out += fmt::format("  passed: {}\n", Bool(audit->passed));
    out += fmt::format("  checked: {}\n", audit->checked);
    out += fmt::format("  skipped_flagged: {}\n", audit->skipped_flagged);
    out += fmt::format("  max_relative_residual: {:.6g}\n",
                       audit->max_relative_residual);
    out += fmt::format("  time_of_max_residual: {:.6g}\n",
                       audit->time_of_max_residual);
    out += fmt::format("  identity_violations: {}\n", audit->identity_violations);
    out += fmt::format("  increases: {}\n", audit->increases);
    out += fmt::format("  increases_flagged: {}\n", audit->increases_flagged);
    out += fmt::format("  increases_unflagged: {}\n", audit->increases_unflagged);
  }
  return out;
}

void WriteSummary(const std::filesystem::path& path, const SimSummary& summary,
                  const AuditReport* audit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << FormatSummary(summary, audit);
}

}  // namespace towtrack

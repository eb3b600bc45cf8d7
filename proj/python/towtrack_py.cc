#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <string>
#include <vector>

#include "towtrack/controller.h"
#include "towtrack/errors.h"
#include "towtrack/powertrain.h"
#include "towtrack/scenario.h"
#include "towtrack/sim_engine.h"
#include "towtrack/trailer_forces.h"
#include "towtrack/trajectory.h"
#include "towtrack/vehicle_model.h"

namespace py = pybind11;
using namespace towtrack;

namespace {

py::dict SummaryDict(const SimSummary& s) {
  py::dict d;
  d["completed"] = s.completed;
  d["abort_reason"] = s.abort_reason;
  d["abort_time"] = s.abort_time;
  d["steps"] = s.steps;
  d["final_x_e"] = s.final_error.x_e;
  d["final_y_e"] = s.final_error.y_e;
  d["final_theta_e"] = s.final_error.theta_e;
  d["final_v_e"] = s.final_error.v_e;
  d["final_delta_psi"] = s.final_delta_psi;
  d["final_abs_path_error"] = s.final_abs_path_error;
  d["max_abs_path_error"] = s.max_abs_path_error;
  d["max_abs_path_error_second_half"] = s.max_abs_path_error_second_half;
  d["v2_increases"] = s.v2_increases;
  d["v2_increases_unsaturated"] = s.v2_increases_unsaturated;
  d["saturation_fraction"] = s.saturation_fraction;
  d["controller_faults"] = s.controller_faults;
  d["jackknife_warnings"] = s.jackknife_warnings;
  return d;
}

py::dict AuditDict(const AuditReport& a) {
  py::dict d;
  d["passed"] = a.passed;
  d["checked"] = a.checked;
  d["skipped_flagged"] = a.skipped_flagged;
  d["max_relative_residual"] = a.max_relative_residual;
  d["time_of_max_residual"] = a.time_of_max_residual;
  d["identity_violations"] = a.identity_violations;
  d["increases"] = a.increases;
  d["increases_flagged"] = a.increases_flagged;
  d["increases_unflagged"] = a.increases_unflagged;
  return d;
}

// Column name -> numpy array, in LogColumns() order.
py::dict LogDict(const std::vector<LogRecord>& log) {
  const auto& names = LogColumns();
  std::vector<py::array_t<double>> columns;
  std::vector<double*> data;
  for (std::size_t c = 0; c < names.size(); ++c) {
    columns.emplace_back(static_cast<py::ssize_t>(log.size()));
    data.push_back(columns.back().mutable_data());
  }
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto row = LogValues(log[i]);
    for (std::size_t c = 0; c < row.size(); ++c) data[c][i] = row[c];
  }
  py::dict d;
  for (std::size_t c = 0; c < names.size(); ++c) d[names[c].c_str()] = columns[c];
  return d;
}

std::vector<Override> ToOverrides(const std::map<std::string, std::string>& in) {
  return {in.begin(), in.end()};
}

AuditOptions MakeAuditOptions(const std::string& function, double tolerance,
                              bool check_identity) {
  AuditOptions o;
  if (function == "V1") {
    o.function = LyapunovFunction::kV1;
  } else if (function == "V2") {
    o.function = LyapunovFunction::kV2;
  } else {
    throw ConfigError("function must be 'V1' or 'V2'");
  }
  o.relative_tolerance = tolerance;
  o.check_identity = check_identity;
  return o;
}

}  // namespace

PYBIND11_MODULE(_towtrack, m) {
  m.doc() = "Force-compensating trajectory tracking for tractor-trailers";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<IngestionError>(m, "IngestionError", error.ptr());
  py::register_exception<IllConditionedFitError>(m, "IllConditionedFitError",
                                                 error.ptr());
  py::register_exception<InfeasibleTrajectoryError>(
      m, "InfeasibleTrajectoryError", error.ptr());
  py::register_exception<InvalidReferenceError>(m, "InvalidReferenceError",
                                                error.ptr());
  py::register_exception<SingularSteeringError>(m, "SingularSteeringError",
                                                error.ptr());
  py::register_exception<JackKnifeError>(m, "JackKnifeError", error.ptr());
  py::register_exception<DegenerateMapError>(m, "DegenerateMapError",
                                             error.ptr());

  py::class_<TractorParams>(m, "TractorParams")
      .def(py::init<>())
      .def_readwrite("mass", &TractorParams::mass)
      .def_readwrite("yaw_inertia", &TractorParams::yaw_inertia)
      .def_readwrite("a", &TractorParams::a)
      .def_readwrite("b", &TractorParams::b)
      .def_readwrite("c", &TractorParams::c)
      .def_readwrite("tau", &TractorParams::tau)
      .def_readwrite("psi_max", &TractorParams::psi_max)
      .def_property_readonly("wheelbase", &TractorParams::wheelbase)
      .def("validate", &TractorParams::Validate);

  py::class_<TractorState>(m, "TractorState")
      .def(py::init<>())
      .def(py::init([](double x, double y, double theta, double v_x, double psi) {
             return TractorState{x, y, theta, v_x, psi};
           }),
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("theta") = 0.0,
           py::arg("v_x") = 0.0, py::arg("psi") = 0.0)
      .def_readwrite("x", &TractorState::x)
      .def_readwrite("y", &TractorState::y)
      .def_readwrite("theta", &TractorState::theta)
      .def_readwrite("v_x", &TractorState::v_x)
      .def_readwrite("psi", &TractorState::psi);

  py::class_<HitchForce>(m, "HitchForce")
      .def(py::init([](double hx, double hy) { return HitchForce{hx, hy}; }),
           py::arg("hx") = 0.0, py::arg("hy") = 0.0)
      .def_readwrite("hx", &HitchForce::hx)
      .def_readwrite("hy", &HitchForce::hy);

  py::class_<DynamicsCoefficients>(m, "DynamicsCoefficients")
      .def_readonly("phi1", &DynamicsCoefficients::phi1)
      .def_readonly("phi2", &DynamicsCoefficients::phi2)
      .def_readonly("phi3", &DynamicsCoefficients::phi3)
      .def_readonly("z", &DynamicsCoefficients::z);

  m.def("compute_coefficients", &ComputeCoefficients, py::arg("tractor"),
        py::arg("psi"), py::arg("psi_dot"), py::arg("v_x"));

  py::class_<PropulsionMap>(m, "PropulsionMap")
      .def(py::init<>())
      .def_static("identified", &PropulsionMap::Identified)
      .def_readwrite("coeffs", &PropulsionMap::coeffs)
      .def_readwrite("u1_min", &PropulsionMap::u1_min)
      .def_readwrite("u1_max", &PropulsionMap::u1_max)
      .def_readwrite("v_max", &PropulsionMap::v_max);

  py::class_<BrakeParams>(m, "BrakeParams")
      .def(py::init<>())
      .def_readwrite("ratio", &BrakeParams::ratio)
      .def_readwrite("u3_max", &BrakeParams::u3_max);

  py::class_<FitReport>(m, "FitReport")
      .def_readonly("map", &FitReport::map)
      .def_readonly("rms_residual", &FitReport::rms_residual)
      .def_readonly("sample_count", &FitReport::sample_count)
      .def_readonly("condition_number", &FitReport::condition_number);

  m.def(
      "fit_map",
      [](const std::vector<double>& u1, const std::vector<double>& v,
         const std::vector<double>& force) {
        if (u1.size() != v.size() || u1.size() != force.size()) {
          throw ConfigError("u1, v and force must have the same length");
        }
        std::vector<MapFitSample> samples;
        for (std::size_t i = 0; i < u1.size(); ++i) {
          samples.push_back({u1[i], v[i], force[i]});
        }
        return FitMap(samples);
      },
      py::arg("u1"), py::arg("v"), py::arg("force"));
  m.def("evaluate_map", &EvaluateMap, py::arg("map"), py::arg("u1"), py::arg("v"));
  m.def(
      "invert_map",
      [](const PropulsionMap& map, double force, double v) {
        const ThrottleCommand c = InvertMap(map, force, v);
        return py::make_tuple(c.u1, c.saturated);
      },
      py::arg("map"), py::arg("force"), py::arg("v"));
  m.def(
      "select_drive_actuation",
      [](double omega2, const PropulsionMap& map, const BrakeParams& brake,
         double v) {
        const DriveCommand c = SelectDriveActuation(omega2, map, brake, v);
        py::dict d;
        d["mode"] = c.mode == DriveMode::kBrake ? "brake" : "throttle";
        d["u1"] = c.u1;
        d["u3"] = c.u3;
        d["drive_force"] = c.drive_force;
        d["saturated"] = c.saturated;
        return d;
      },
      py::arg("omega2"), py::arg("map"), py::arg("brake"), py::arg("v"));

  py::class_<ControllerGains>(m, "ControllerGains")
      .def(py::init([](double k_theta, double k_v, double k_psi) {
             return ControllerGains{k_theta, k_v, k_psi};
           }),
           py::arg("k_theta") = 1.0, py::arg("k_v") = 2.0, py::arg("k_psi") = 5.0)
      .def_readwrite("k_theta", &ControllerGains::k_theta)
      .def_readwrite("k_v", &ControllerGains::k_v)
      .def_readwrite("k_psi", &ControllerGains::k_psi)
      .def("validate", &ControllerGains::Validate);

  py::class_<TrackingError>(m, "TrackingError")
      .def(py::init([](double x_e, double y_e, double theta_e, double v_e) {
             return TrackingError{x_e, y_e, theta_e, v_e};
           }),
           py::arg("x_e") = 0.0, py::arg("y_e") = 0.0, py::arg("theta_e") = 0.0,
           py::arg("v_e") = 0.0)
      .def_readwrite("x_e", &TrackingError::x_e)
      .def_readwrite("y_e", &TrackingError::y_e)
      .def_readwrite("theta_e", &TrackingError::theta_e)
      .def_readwrite("v_e", &TrackingError::v_e);

  py::class_<ReferenceSample>(m, "ReferenceSample")
      .def(py::init<>())
      .def_readwrite("x_d", &ReferenceSample::x_d)
      .def_readwrite("y_d", &ReferenceSample::y_d)
      .def_readwrite("theta_d", &ReferenceSample::theta_d)
      .def_readwrite("v_d", &ReferenceSample::v_d)
      .def_readwrite("theta_d_dot", &ReferenceSample::theta_d_dot)
      .def_readwrite("v_d_dot", &ReferenceSample::v_d_dot)
      .def_readwrite("theta_d_ddot", &ReferenceSample::theta_d_ddot)
      .def_readwrite("v_d_ddot", &ReferenceSample::v_d_ddot);

  m.def("error_transform", &ErrorTransform, py::arg("state"), py::arg("ref"));
  m.def("compute_omega1", &ComputeOmega1, py::arg("error"), py::arg("ref"),
        py::arg("gains"));
  m.def(
      "sinc_like",
      [](double theta) {
        const SincTerms s = SincLike(theta);
        return py::make_tuple(s.s1, s.s2, s.ds1, s.ds2);
      },
      py::arg("theta_e"));

  py::class_<Trajectory, std::shared_ptr<Trajectory>>(m, "Trajectory")
      .def("sample", &Trajectory::Sample, py::arg("t"))
      .def("curvature", &Trajectory::Curvature, py::arg("t"));

  m.def(
      "make_trajectory",
      [](const std::string& kind, double radius, double speed, bool clockwise,
         const TractorParams& tractor) {
        GeneratorSpec spec;
        spec.kind = ParseTrajectoryKind(kind);
        spec.radius = radius;
        spec.clockwise = clockwise;
        spec.speed = SpeedProfile::Constant(speed);
        return std::const_pointer_cast<Trajectory>(MakeGenerator(spec, tractor));
      },
      py::arg("kind"), py::arg("radius") = 10.0, py::arg("speed") = 1.0,
      py::arg("clockwise") = false, py::arg("tractor") = TractorParams{});
  m.def(
      "load_trajectory_csv",
      [](const std::filesystem::path& path) {
        return std::const_pointer_cast<Trajectory>(LoadTrajectoryCsv(path));
      },
      py::arg("path"));
  m.def("minimum_turning_radius", &MinimumTurningRadius, py::arg("tractor"));

  py::class_<TrailerParams>(m, "TrailerParams")
      .def(py::init([](double mass, double hitch_offset, double drawbar_length,
                       double rolling_resistance) {
             return TrailerParams{mass, hitch_offset, drawbar_length,
                                  rolling_resistance};
           }),
           py::arg("mass") = 630.0, py::arg("hitch_offset") = 0.0,
           py::arg("drawbar_length") = 2.5, py::arg("rolling_resistance") = 0.02)
      .def_readwrite("mass", &TrailerParams::mass)
      .def_readwrite("hitch_offset", &TrailerParams::hitch_offset)
      .def_readwrite("drawbar_length", &TrailerParams::drawbar_length)
      .def_readwrite("rolling_resistance", &TrailerParams::rolling_resistance);

  m.def(
      "quasi_static_hitch_force",
      [](double heading, double speed, double yaw_rate, double accel,
         double yaw_accel, const std::vector<double>& trailer_headings,
         const std::vector<TrailerParams>& trailers) {
        const BodyMotion tractor{heading, speed, yaw_rate, accel, yaw_accel};
        return QuasiStaticHitchForce(tractor, ChainState{trailer_headings},
                                     trailers);
      },
      py::arg("heading"), py::arg("speed"), py::arg("yaw_rate"),
      py::arg("accel"), py::arg("yaw_accel"), py::arg("trailer_headings"),
      py::arg("trailers"));

  m.def(
      "run_scenario",
      [](const std::filesystem::path& path,
         const std::map<std::string, std::string>& overrides) {
        const Scenario scenario = LoadScenario(path, ToOverrides(overrides));
        SimResult result;
        {
          py::gil_scoped_release release;
          result = RunClosedLoop(scenario.setup);
        }
        py::dict out;
        out["name"] = scenario.name;
        out["summary"] = SummaryDict(result.summary);
        out["log"] = LogDict(result.log);
        if (scenario.audit.enabled) {
          out["audit"] = AuditDict(LyapunovAudit(result.log, scenario.audit.options));
        } else {
          out["audit"] = py::none();
        }
        return out;
      },
      py::arg("path"), py::arg("overrides") = std::map<std::string, std::string>{},
      "Runs a scenario file; returns its summary, audit and log columns.");

  m.def(
      "audit_log",
      [](const std::filesystem::path& path, const std::string& function,
         double relative_tolerance, bool check_identity) {
        const auto log = ReadLogCsv(path);
        return AuditDict(LyapunovAudit(
            log, MakeAuditOptions(function, relative_tolerance, check_identity)));
      },
      py::arg("path"), py::arg("function") = "V2",
      py::arg("relative_tolerance") = 1e-3, py::arg("check_identity") = true);

  m.attr("LOG_COLUMNS") = LogColumns();
}

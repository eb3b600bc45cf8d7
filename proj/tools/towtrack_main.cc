// towtrack: fit propulsion maps, generate reference trajectories, run
// closed-loop scenarios and audit their logs.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "towtrack/errors.h"
#include "towtrack/powertrain.h"
#include "towtrack/scenario.h"
#include "towtrack/sim_engine.h"
#include "towtrack/trajectory.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPlantAbort = 3;
constexpr int kExitAudit = 4;

namespace fs = std::filesystem;
using namespace towtrack;

int Fail(const std::string& message) {
  fmt::print(stderr, "error: {}\n", message);
  return kExitConfig;
}

int FitMapCommand(const fs::path& input, const fs::path& output) {
  try {
    const auto samples = ReadMapSamplesCsv(input);
    const FitReport report = FitMap(samples);
    WriteMapFile(output, report.map);
    fmt::print("samples: {}\n", report.sample_count);
    fmt::print("coefficients: {}\n", FormatCoefficients(report.map));
    fmt::print("rms_residual_N: {:.6g}\n", report.rms_residual);
    fmt::print("condition_number: {:.6g}\n", report.condition_number);
    fmt::print("u1_range: [{:.6g}, {:.6g}]\n", report.map.u1_min,
               report.map.u1_max);
    fmt::print("v_max: {:.6g}\n", report.map.v_max);
    return kExitOk;
  } catch (const IllConditionedFitError& e) {
    std::string message = e.what();
    for (const auto& d : e.deficient_directions()) {
      message += fmt::format("\n  null direction: {}", d);
    }
    return Fail(message);
  } catch (const Error& e) {
    return Fail(e.what());
  }
}

struct GenTrajArgs {
  std::string kind = "circle";
  double radius = 10.0;
  bool clockwise = false;
  double turn_angle = 0.7853981633974483;
  double lead_length = 10.0;
  double heading = 0.0;
  double speed = 1.0;
  double duration = 10.0;
  double rate = 100.0;
  double wheelbase = TractorParams{}.wheelbase();
  double psi_max = TractorParams{}.psi_max;
  fs::path output;
};

int GenTrajCommand(const GenTrajArgs& args) {
  try {
    TractorParams tractor;
    tractor.a = args.wheelbase / 2.0;
    tractor.b = args.wheelbase / 2.0;
    tractor.psi_max = args.psi_max;
    tractor.Validate();
    GeneratorSpec spec;
    spec.kind = ParseTrajectoryKind(args.kind);
    spec.radius = args.radius;
    spec.clockwise = args.clockwise;
    spec.turn_angle = args.turn_angle;
    spec.lead_length = args.lead_length;
    spec.heading = args.heading;
    spec.speed = SpeedProfile::Constant(args.speed);
    const auto trajectory = MakeGenerator(spec, tractor);
    const auto rows = SampleTrajectory(*trajectory, args.duration, args.rate);
    WriteTrajectoryCsv(args.output, rows);
    fmt::print("rows: {}\n", rows.size());
    return kExitOk;
  } catch (const Error& e) {
    return Fail(e.what());
  }
}

struct SimulateArgs {
  fs::path scenario;
  fs::path out_dir = ".";
  std::string log;
  std::string summary;
  bool no_audit = false;
  bool timestamp = false;
};

int SimulateCommand(const SimulateArgs& args,
                    const std::vector<std::string>& extras) {
  Scenario scenario;
  try {
    std::vector<Override> overrides;
    for (const auto& extra : extras) overrides.push_back(ParseOverride(extra));
    scenario = LoadScenario(args.scenario, overrides);
  } catch (const Error& e) {
    return Fail(e.what());
  }

  const auto started = std::chrono::system_clock::now();
  const SimResult result = RunClosedLoop(scenario.setup);

  AuditReport audit;
  const bool run_audit = scenario.audit.enabled && !args.no_audit;
  if (run_audit) audit = LyapunovAudit(result.log, scenario.audit.options);

  const fs::path log_path =
      args.out_dir / (args.log.empty() ? scenario.output.log : fs::path(args.log));
  const fs::path summary_path =
      args.out_dir /
      (args.summary.empty() ? scenario.output.summary : fs::path(args.summary));
  try {
    fs::create_directories(args.out_dir);
    WriteLogCsv(log_path, result.log);
    WriteSummary(summary_path, result.summary, run_audit ? &audit : nullptr);
  } catch (const std::exception& e) {
    return Fail(e.what());
  }

  fmt::print("scenario: {}\n", scenario.name);
  if (args.timestamp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(started);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    fmt::print("started: {}\n", buf);
  }
  fmt::print("{}", FormatSummary(result.summary, run_audit ? &audit : nullptr));
  fmt::print("log: {}\nsummary: {}\n", log_path.string(), summary_path.string());

  if (!result.summary.completed) {
    fmt::print(stderr, "plant abort at t = {:.6g} s: {}\n",
               result.summary.abort_time, result.summary.abort_reason);
    return kExitPlantAbort;
  }
  if (run_audit && !audit.passed) {
    fmt::print(stderr, "Lyapunov audit failed\n");
    return kExitAudit;
  }
  return kExitOk;
}

struct AuditArgs {
  fs::path log;
  std::string function = "V2";
  AuditOptions options;
  bool no_identity = false;
};

int AuditCommand(AuditArgs args) {
  try {
    if (args.function == "V1") {
      args.options.function = LyapunovFunction::kV1;
    } else if (args.function == "V2") {
      args.options.function = LyapunovFunction::kV2;
    } else {
      return Fail(fmt::format("--function must be V1 or V2, got '{}'",
                              args.function));
    }
    args.options.check_identity = !args.no_identity;
    const auto log = ReadLogCsv(args.log);
    const AuditReport report = LyapunovAudit(log, args.options);
    fmt::print("records: {}\n", log.size());
    fmt::print("function: {}\n", args.function);
    fmt::print("passed: {}\n", report.passed ? "true" : "false");
    fmt::print("checked: {}\n", report.checked);
    fmt::print("skipped_flagged: {}\n", report.skipped_flagged);
    fmt::print("max_relative_residual: {:.6g}\n", report.max_relative_residual);
    fmt::print("time_of_max_residual: {:.6g}\n", report.time_of_max_residual);
    fmt::print("identity_violations: {}\n", report.identity_violations);
    fmt::print("increases: {}\n", report.increases);
    fmt::print("increases_flagged: {}\n", report.increases_flagged);
    fmt::print("increases_unflagged: {}\n", report.increases_unflagged);
    return report.passed ? kExitOk : kExitAudit;
  } catch (const Error& e) {
    return Fail(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Force-compensating trajectory tracking for tractor-trailer "
               "combinations"};
  app.require_subcommand(1);

  fs::path fit_input, fit_output;
  auto* fit = app.add_subcommand("fit-map", "Fit the propulsion map to u1,v,F data");
  fit->add_option("input", fit_input, "CSV with header u1,v,F")->required();
  fit->add_option("output", fit_output, "Map file to write")->required();

  GenTrajArgs gen;
  auto* gt = app.add_subcommand("gen-traj", "Write a reference trajectory CSV");
  gt->add_option("--kind", gen.kind, "line, circle, figure_eight or s_curve")
      ->capture_default_str();
  gt->add_option("--radius", gen.radius, "Turn radius [m]")->capture_default_str();
  gt->add_flag("--clockwise", gen.clockwise, "Circle turns clockwise");
  gt->add_option("--turn-angle", gen.turn_angle, "S-curve arc sweep [rad]")
      ->capture_default_str();
  gt->add_option("--lead-length", gen.lead_length,
                 "S-curve straight before the first arc [m]")
      ->capture_default_str();
  gt->add_option("--heading", gen.heading, "Initial heading [rad]")
      ->capture_default_str();
  gt->add_option("--speed", gen.speed, "Reference speed [m/s]")
      ->capture_default_str();
  gt->add_option("--duration", gen.duration, "Duration [s]")->capture_default_str();
  gt->add_option("--rate", gen.rate, "Sample rate [Hz]")->capture_default_str();
  gt->add_option("--wheelbase", gen.wheelbase, "Tractor wheelbase a + b [m]")
      ->capture_default_str();
  gt->add_option("--psi-max", gen.psi_max, "Steering limit [rad]")
      ->capture_default_str();
  gt->add_option("-o,--output", gen.output, "CSV to write")->required();

  SimulateArgs sim;
  auto* sm = app.add_subcommand(
      "simulate",
      "Run a scenario; extra --section.key=value flags override scenario keys");
  sm->add_option("scenario", sim.scenario, "Scenario YAML file")->required();
  sm->add_option("--out-dir", sim.out_dir, "Directory for the outputs")
      ->capture_default_str();
  sm->add_option("--log", sim.log, "Log CSV name (overrides output.log)");
  sm->add_option("--summary", sim.summary,
                 "Summary name (overrides output.summary)");
  sm->add_flag("--no-audit", sim.no_audit, "Skip the Lyapunov audit");
  sm->add_flag("--timestamp", sim.timestamp, "Print the wall-clock start time");
  sm->allow_extras();

  AuditArgs audit;
  auto* au = app.add_subcommand("audit", "Re-run the Lyapunov audit on a log CSV");
  au->add_option("log", audit.log, "Log CSV written by simulate")->required();
  au->add_option("--function", audit.function, "V1 or V2")->capture_default_str();
  au->add_option("--relative-tolerance", audit.options.relative_tolerance)
      ->capture_default_str();
  au->add_option("--increase-tolerance", audit.options.increase_tolerance)
      ->capture_default_str();
  au->add_option("--residual-floor", audit.options.residual_floor)
      ->capture_default_str();
  au->add_option("--max-unflagged-increases",
                 audit.options.max_unflagged_increases)
      ->capture_default_str();
  au->add_flag("--no-identity", audit.no_identity,
               "Only check monotonicity, not the rate identity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*fit) return FitMapCommand(fit_input, fit_output);
  if (*gt) return GenTrajCommand(gen);
  if (*sm) return SimulateCommand(sim, sm->remaining());
  if (*au) return AuditCommand(audit);
  return kExitConfig;
}

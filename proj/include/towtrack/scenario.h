#ifndef TOWTRACK_SCENARIO_H_
#define TOWTRACK_SCENARIO_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "towtrack/sim_engine.h"

namespace towtrack {

struct AuditSettings {
  bool enabled = true;
  AuditOptions options;
};

// Output file names; relative names are resolved by the caller.
struct OutputPaths {
  std::filesystem::path log = "log.csv";
  std::filesystem::path summary = "summary.txt";
};

// A fully resolved simulation scenario.
//
// Scenario files are YAML with these top-level sections, all optional except
// `trajectory` and `sim`:
//
//   name, seed, tractor, propulsion, brake, trailers, force_provider, replay,
//   sensor, trajectory, gains, controller, sim, initial, audit, output
//
// Unknown keys are rejected. File references are relative to the scenario
// file. See README.md for every key and its unit.
struct Scenario {
  std::string name;
  SimulationSetup setup;
  AuditSettings audit;
  OutputPaths output;
};

// A dotted-path override such as {"gains.k_v", "0"} or
// {"trailers.1.mass", "1300"}. The value is parsed as YAML.
using Override = std::pair<std::string, std::string>;

// Splits "gains.k_v=0" (leading dashes allowed) into an Override.
Override ParseOverride(const std::string& text);

// Throws ConfigError with the line and key of the offending entry, and any
// error of the referenced data files (IngestionError) or trajectory
// (InfeasibleTrajectoryError).
Scenario LoadScenario(const std::filesystem::path& path,
                      const std::vector<Override>& overrides = {});

// Same, from text; relative file references resolve against `base_dir`.
Scenario ParseScenario(const std::string& text,
                       const std::filesystem::path& base_dir,
                       const std::vector<Override>& overrides = {});

}  // namespace towtrack

#endif  // TOWTRACK_SCENARIO_H_

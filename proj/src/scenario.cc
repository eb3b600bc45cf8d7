#include "towtrack/scenario.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "towtrack/errors.h"

namespace towtrack {

namespace {

std::string Where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.line < 0) return "override";
  return fmt::format("line {}", mark.line + 1);
}

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Read-only view of one YAML mapping with strict key checking.
class Section {
 public:
  Section(const YAML::Node& node, std::string path,
          std::initializer_list<const char*> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node_ || node_.IsNull()) return;
    if (!node_.IsMap()) {
      throw ConfigError(fmt::format("{}: '{}' must be a mapping", Where(node_),
                                    path_.empty() ? "<root>" : path_));
    }
    for (const auto& entry : node_) {
      const std::string key = entry.first.as<std::string>();
      const bool known = std::any_of(allowed.begin(), allowed.end(),
                                     [&](const char* a) { return key == a; });
      if (!known) {
        throw ConfigError(fmt::format("{}: unknown key '{}'", Where(entry.first),
                                      Join(path_, key)));
      }
    }
  }

  bool Has(const char* key) const {
    return node_ && node_.IsMap() && node_[key];
  }

  YAML::Node Child(const char* key) const {
    return Has(key) ? node_[key] : YAML::Node();
  }

  std::string Path(const char* key) const { return Join(path_, key); }

  template <typename T>
  T Get(const char* key, T fallback) const {
    if (!Has(key)) return fallback;
    return As<T>(node_[key], Path(key));
  }

  template <typename T>
  T Require(const char* key) const {
    if (!Has(key)) {
      throw ConfigError(fmt::format("{}: missing required key '{}'",
                                    node_ ? Where(node_) : "scenario", Path(key)));
    }
    return As<T>(node_[key], Path(key));
  }

  template <typename T>
  static T As(const YAML::Node& value, const std::string& path) {
    if (!value.IsScalar()) {
      throw ConfigError(
          fmt::format("{}: '{}' must be a scalar", Where(value), path));
    }
    try {
      return value.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("{}: '{}' has invalid value '{}'",
                                    Where(value), path, value.Scalar()));
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
};

std::vector<double> NumberList(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) {
    throw ConfigError(fmt::format("{}: '{}' must be a list", Where(node), path));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    out.push_back(Section::As<double>(node[i], fmt::format("{}.{}", path, i)));
  }
  return out;
}

template <typename Enum>
Enum Choice(const Section& s, const char* key, Enum fallback,
            std::initializer_list<std::pair<const char*, Enum>> options) {
  if (!s.Has(key)) return fallback;
  const YAML::Node node = s.Child(key);
  const auto value = Section::As<std::string>(node, s.Path(key));
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : fmt::format(", {}", name);
  }
  throw ConfigError(fmt::format("{}: '{}' must be one of {}, got '{}'",
                                Where(node), s.Path(key), names, value));
}

std::filesystem::path Resolve(const std::filesystem::path& base,
                              const std::string& file) {
  const std::filesystem::path p(file);
  return p.is_absolute() ? p : base / p;
}

// Re-throws a validation failure with the location of the section.
template <typename Fn>
void Checked(const YAML::Node& node, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    if (node && node.Mark().line >= 0) {
      throw ConfigError(fmt::format("{}: {}", Where(node), e.what()));
    }
    throw;
  }
}

TractorParams ParseTractor(const YAML::Node& node) {
  const Section s(node, "tractor",
                  {"mass", "yaw_inertia", "a", "b", "c", "tau", "psi_max"});
  TractorParams p;
  p.mass = s.Get("mass", p.mass);
  p.yaw_inertia = s.Get("yaw_inertia", p.yaw_inertia);
  p.a = s.Get("a", p.a);
  p.b = s.Get("b", p.b);
  p.c = s.Get("c", p.c);
  p.tau = s.Get("tau", p.tau);
  p.psi_max = s.Get("psi_max", p.psi_max);
  Checked(node, [&] { p.Validate(); });
  return p;
}

PropulsionMap ParsePropulsion(const YAML::Node& node,
                              const std::filesystem::path& base) {
  const Section s(node, "propulsion",
                  {"coefficients", "map_file", "u1_min", "u1_max", "v_max"});
  PropulsionMap map = PropulsionMap::Identified();
  if (s.Has("coefficients") && s.Has("map_file")) {
    throw ConfigError(fmt::format(
        "{}: 'propulsion' takes either 'coefficients' or 'map_file', not both",
        Where(node)));
  }
  if (s.Has("map_file")) {
    map = ReadMapFile(Resolve(base, s.Require<std::string>("map_file")));
  }
  if (s.Has("coefficients")) {
    const auto c = NumberList(s.Child("coefficients"), s.Path("coefficients"));
    if (c.size() != static_cast<std::size_t>(kMapOrder)) {
      throw ConfigError(fmt::format("{}: 'propulsion.coefficients' needs {} values, got {}",
                                    Where(s.Child("coefficients")), kMapOrder,
                                    c.size()));
    }
    std::copy(c.begin(), c.end(), map.coeffs.begin());
  }
  map.u1_min = s.Get("u1_min", map.u1_min);
  map.u1_max = s.Get("u1_max", map.u1_max);
  map.v_max = s.Get("v_max", map.v_max);
  Checked(node, [&] { map.Validate(); });
  return map;
}

BrakeParams ParseBrake(const YAML::Node& node) {
  const Section s(node, "brake", {"ratio", "u3_max"});
  BrakeParams b;
  b.ratio = s.Get("ratio", b.ratio);
  b.u3_max = s.Get("u3_max", b.u3_max);
  Checked(node, [&] { b.Validate(); });
  return b;
}

std::vector<TrailerParams> ParseTrailers(const YAML::Node& node,
                                         const TractorParams& tractor) {
  std::vector<TrailerParams> out;
  if (!node || node.IsNull()) return out;
  if (!node.IsSequence()) {
    throw ConfigError(fmt::format("{}: 'trailers' must be a list", Where(node)));
  }
  for (std::size_t i = 0; i < node.size(); ++i) {
    const Section s(node[i], fmt::format("trailers.{}", i),
                    {"mass", "payload", "hitch_offset", "drawbar_length",
                     "rolling_resistance"});
    TrailerParams t;
    t.mass = s.Get("mass", t.mass) + s.Get("payload", 0.0);
    t.hitch_offset = s.Get("hitch_offset", i == 0 ? tractor.c : t.hitch_offset);
    t.drawbar_length = s.Get("drawbar_length", t.drawbar_length);
    t.rolling_resistance = s.Get("rolling_resistance", t.rolling_resistance);
    Checked(node[i], [&] { t.Validate(); });
    out.push_back(t);
  }
  return out;
}

ForceProfile ParseReplay(const YAML::Node& node,
                         const std::filesystem::path& base) {
  const Section s(node, "replay", {"file", "samples"});
  if (s.Has("file") == s.Has("samples")) {
    throw ConfigError(fmt::format(
        "{}: 'replay' needs exactly one of 'file' or 'samples'",
        node ? Where(node) : "scenario"));
  }
  if (s.Has("file")) {
    return ReadForceProfileCsv(Resolve(base, s.Require<std::string>("file")));
  }
  const YAML::Node rows = s.Child("samples");
  if (!rows.IsSequence()) {
    throw ConfigError(
        fmt::format("{}: 'replay.samples' must be a list", Where(rows)));
  }
  std::vector<ForceSample> samples;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string path = fmt::format("replay.samples.{}", i);
    const auto v = NumberList(rows[i], path);
    if (v.size() != 3) {
      throw ConfigError(
          fmt::format("{}: '{}' must be [t, Hx, Hy]", Where(rows[i]), path));
    }
    samples.push_back({v[0], v[1], v[2]});
  }
  try {
    return ForceProfile(std::move(samples));
  } catch (const IngestionError& e) {
    throw ConfigError(fmt::format("{}: replay.samples: {}", Where(rows), e.what()));
  }
}

SensorModel ParseSensor(const YAML::Node& node) {
  const Section s(node, "sensor",
                  {"noise_sigma", "bias", "sample_period", "saturation"});
  SensorModel m;
  m.noise_sigma = s.Get("noise_sigma", m.noise_sigma);
  m.bias = s.Get("bias", m.bias);
  m.sample_period = s.Get("sample_period", m.sample_period);
  m.saturation = s.Get("saturation", m.saturation);
  Checked(node, [&] { m.Validate(); });
  return m;
}

SpeedProfile ParseSpeed(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) return SpeedProfile::Constant(Section::As<double>(node, path));
  const Section s(node, path,
                  {"initial", "final", "ramp_start", "ramp_duration"});
  SpeedProfile p;
  p.initial = s.Require<double>("initial");
  p.final = s.Get("final", p.initial);
  p.ramp_start = s.Get("ramp_start", 0.0);
  p.ramp_duration = s.Get("ramp_duration", 0.0);
  Checked(node, [&] { p.Validate(); });
  return p;
}

std::shared_ptr<const Trajectory> ParseTrajectory(
    const YAML::Node& node, const TractorParams& tractor,
    const std::filesystem::path& base) {
  if (!node) throw ConfigError("scenario: missing required section 'trajectory'");
  const Section s(node, "trajectory",
                  {"kind", "file", "radius", "clockwise", "turn_angle",
                   "lead_length", "heading", "x0", "y0", "speed"});
  if (s.Has("file")) {
    for (const char* key : {"kind", "radius", "clockwise", "turn_angle",
                            "lead_length", "heading", "x0", "y0", "speed"}) {
      if (s.Has(key)) {
        throw ConfigError(fmt::format(
            "{}: 'trajectory.{}' cannot be combined with 'trajectory.file'",
            Where(s.Child(key)), key));
      }
    }
    return LoadTrajectoryCsv(Resolve(base, s.Require<std::string>("file")));
  }
  GeneratorSpec g;
  Checked(s.Child("kind"),
          [&] { g.kind = ParseTrajectoryKind(s.Require<std::string>("kind")); });
  g.radius = s.Get("radius", g.radius);
  g.clockwise = s.Get("clockwise", g.clockwise);
  g.turn_angle = s.Get("turn_angle", g.turn_angle);
  g.lead_length = s.Get("lead_length", g.lead_length);
  g.heading = s.Get("heading", g.heading);
  g.x0 = s.Get("x0", g.x0);
  g.y0 = s.Get("y0", g.y0);
  if (s.Has("speed")) g.speed = ParseSpeed(s.Child("speed"), s.Path("speed"));
  return MakeGenerator(g, tractor);
}

ControllerGains ParseGains(const YAML::Node& node) {
  const Section s(node, "gains", {"k_theta", "k_v", "k_psi"});
  ControllerGains g;
  g.k_theta = s.Get("k_theta", g.k_theta);
  g.k_v = s.Get("k_v", g.k_v);
  g.k_psi = s.Get("k_psi", g.k_psi);
  Checked(node, [&] { g.Validate(); });
  return g;
}

ControllerOptions ParseController(const YAML::Node& node) {
  const Section s(node, "controller", {"hitch_compensation", "psi_rate_source"});
  ControllerOptions o;
  o.hitch_compensation = s.Get("hitch_compensation", o.hitch_compensation);
  o.steering_rate = Choice(
      s, "psi_rate_source", o.steering_rate,
      {{"previous_command", SteeringRateSource::kPreviousCommand},
       {"current_command", SteeringRateSource::kCurrentCommand}});
  return o;
}

SimConfig ParseSim(const YAML::Node& node) {
  if (!node) throw ConfigError("scenario: missing required section 'sim'");
  const Section s(node, "sim",
                  {"dt_physics", "dt_control", "duration", "log_decimation",
                   "timing", "actuation"});
  SimConfig c;
  c.dt_physics = s.Get("dt_physics", c.dt_physics);
  c.dt_control = s.Get("dt_control", c.dt_control);
  c.duration = s.Require<double>("duration");
  c.log_decimation = s.Get("log_decimation", c.log_decimation);
  c.timing = Choice(s, "timing", c.timing,
                    {{"sampled", ControlTiming::kSampled},
                     {"continuous", ControlTiming::kContinuous}});
  c.actuation = Choice(s, "actuation", c.actuation,
                       {{"backstepping", ActuationModel::kBackstepping},
                        {"ideal", ActuationModel::kIdeal}});
  Checked(node, [&] { c.Validate(); });
  return c;
}

InitialCondition ParseInitial(const YAML::Node& node) {
  const Section s(node, "initial", {"error", "psi", "hitch_angles", "state"});
  InitialCondition ic;
  if (s.Has("error") && s.Has("state")) {
    throw ConfigError(fmt::format(
        "{}: 'initial' takes either 'error' or 'state', not both", Where(node)));
  }
  if (s.Has("error")) {
    const Section e(s.Child("error"), "initial.error",
                    {"x_e", "y_e", "theta_e", "v_e"});
    ic.error.x_e = e.Get("x_e", 0.0);
    ic.error.y_e = e.Get("y_e", 0.0);
    ic.error.theta_e = e.Get("theta_e", 0.0);
    ic.error.v_e = e.Get("v_e", 0.0);
  }
  if (s.Has("state")) {
    const Section st(s.Child("state"), "initial.state",
                     {"x", "y", "theta", "v_x", "psi"});
    TractorState x;
    x.x = st.Get("x", 0.0);
    x.y = st.Get("y", 0.0);
    x.theta = st.Get("theta", 0.0);
    x.v_x = st.Get("v_x", 0.0);
    x.psi = st.Get("psi", 0.0);
    ic.state = x;
    if (s.Has("psi")) {
      throw ConfigError(fmt::format(
          "{}: use 'initial.state.psi' together with 'initial.state'",
          Where(s.Child("psi"))));
    }
  }
  ic.psi = s.Get("psi", 0.0);
  if (s.Has("hitch_angles")) {
    ic.hitch_angles = NumberList(s.Child("hitch_angles"), s.Path("hitch_angles"));
  }
  return ic;
}

AuditSettings ParseAudit(const YAML::Node& node) {
  const Section s(node, "audit",
                  {"enabled", "function", "relative_tolerance",
                   "increase_tolerance", "residual_floor", "check_identity",
                   "max_unflagged_increases"});
  AuditSettings a;
  a.enabled = s.Get("enabled", a.enabled);
  a.options.function = Choice(s, "function", a.options.function,
                              {{"V1", LyapunovFunction::kV1},
                               {"V2", LyapunovFunction::kV2}});
  a.options.relative_tolerance =
      s.Get("relative_tolerance", a.options.relative_tolerance);
  a.options.increase_tolerance =
      s.Get("increase_tolerance", a.options.increase_tolerance);
  a.options.residual_floor = s.Get("residual_floor", a.options.residual_floor);
  a.options.check_identity = s.Get("check_identity", a.options.check_identity);
  a.options.max_unflagged_increases =
      s.Get("max_unflagged_increases", a.options.max_unflagged_increases);
  if (!(a.options.relative_tolerance > 0.0) ||
      !(a.options.increase_tolerance >= 0.0) ||
      !(a.options.residual_floor > 0.0)) {
    throw ConfigError(fmt::format("{}: audit tolerances must be positive",
                                  node ? Where(node) : "audit"));
  }
  return a;
}

OutputPaths ParseOutput(const YAML::Node& node) {
  const Section s(node, "output", {"log", "summary"});
  OutputPaths o;
  o.log = s.Get<std::string>("log", o.log.string());
  o.summary = s.Get<std::string>("summary", o.summary.string());
  return o;
}

void ApplyOverride(YAML::Node& root, const Override& o) {
  std::vector<std::string> parts;
  std::stringstream in(o.first);
  for (std::string part; std::getline(in, part, '.');) parts.push_back(part);
  if (parts.empty() || std::any_of(parts.begin(), parts.end(),
                                   [](const auto& p) { return p.empty(); })) {
    throw ConfigError(fmt::format("override '{}': malformed key path", o.first));
  }
  YAML::Node value;
  try {
    value = YAML::Load(o.second);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("override '{}': cannot parse value '{}'",
                                  o.first, o.second));
  }

  YAML::Node cur = root;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& key = parts[i];
    const bool last = i + 1 == parts.size();
    if (cur.IsSequence()) {
      std::size_t index = 0;
      const auto [ptr, ec] =
          std::from_chars(key.data(), key.data() + key.size(), index);
      if (ec != std::errc() || ptr != key.data() + key.size() ||
          index >= cur.size()) {
        throw ConfigError(fmt::format(
            "override '{}': '{}' is not an index of a {}-element list", o.first,
            key, cur.size()));
      }
      if (last) {
        cur[index] = value;
        return;
      }
      YAML::Node next = cur[index];
      cur.reset(next);
    } else if (cur.IsMap() || cur.IsNull() || !cur.IsDefined()) {
      if (last) {
        cur[key] = value;
        return;
      }
      YAML::Node next = cur[key];
      cur.reset(next);
    } else {
      throw ConfigError(fmt::format("override '{}': '{}' is a scalar", o.first,
                                    parts[i - 1]));
    }
  }
}

}  // namespace

Override ParseOverride(const std::string& text) {
  std::string body = text;
  body.erase(0, body.find_first_not_of('-'));
  const auto eq = body.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(
        fmt::format("override '{}' must look like --section.key=value", text));
  }
  return {body.substr(0, eq), body.substr(eq + 1)};
}

Scenario ParseScenario(const std::string& text,
                       const std::filesystem::path& base_dir,
                       const std::vector<Override>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("line {}: {}", e.mark.line + 1, e.msg));
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  for (const auto& o : overrides) ApplyOverride(root, o);

  const Section top(root, "",
                    {"name", "seed", "tractor", "propulsion", "brake", "trailers",
                     "force_provider", "replay", "sensor", "trajectory", "gains",
                     "controller", "sim", "initial", "audit", "output"});
  Scenario sc;
  sc.name = top.Get<std::string>("name", "scenario");
  SimulationSetup& setup = sc.setup;
  setup.plant.tractor = ParseTractor(top.Child("tractor"));
  setup.plant.map = ParsePropulsion(top.Child("propulsion"), base_dir);
  setup.plant.brake = ParseBrake(top.Child("brake"));
  setup.plant.trailers = ParseTrailers(top.Child("trailers"), setup.plant.tractor);
  setup.plant.force_source =
      Choice(top, "force_provider",
             setup.plant.trailers.empty() ? ForceSource::kNone : ForceSource::kChain,
             {{"none", ForceSource::kNone},
              {"chain", ForceSource::kChain},
              {"replay", ForceSource::kReplay}});
  if (top.Has("replay")) {
    if (setup.plant.force_source != ForceSource::kReplay) {
      throw ConfigError(fmt::format(
          "{}: 'replay' is only used with force_provider: replay",
          Where(top.Child("replay"))));
    }
  }
  if (setup.plant.force_source == ForceSource::kReplay) {
    setup.plant.replay = ParseReplay(top.Child("replay"), base_dir);
  }
  setup.sensor = ParseSensor(top.Child("sensor"));
  setup.trajectory =
      ParseTrajectory(top.Child("trajectory"), setup.plant.tractor, base_dir);
  setup.gains = ParseGains(top.Child("gains"));
  setup.controller = ParseController(top.Child("controller"));
  setup.sim = ParseSim(top.Child("sim"));
  setup.sim.seed = top.Get<std::uint64_t>("seed", 0);
  setup.initial = ParseInitial(top.Child("initial"));
  sc.audit = ParseAudit(top.Child("audit"));
  sc.output = ParseOutput(top.Child("output"));
  setup.Validate();
  return sc;
}

Scenario LoadScenario(const std::filesystem::path& path,
                      const std::vector<Override>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(fmt::format("cannot open scenario '{}'", path.string()));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return ParseScenario(buffer.str(), path.parent_path(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace towtrack

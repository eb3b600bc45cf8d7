#include "towtrack/sim_engine.h"

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "test_support.h"
#include "towtrack/errors.h"

namespace towtrack {
namespace {

PlantInputs Ideal(double curvature, double force) {
  PlantInputs in;
  in.actuation = ActuationModel::kIdeal;
  in.curvature = curvature;
  in.drive_force = force;
  return in;
}

PlantInputs Steer(double u2, double u1 = 0.0) {
  PlantInputs in;
  in.u2 = u2;
  in.drive.u1 = u1;
  return in;
}

SimulationSetup CircleSetup(double radius = 10.0) {
  SimulationSetup setup;
  GeneratorSpec spec;
  spec.radius = radius;
  setup.trajectory = MakeGenerator(spec, setup.plant.tractor);
  setup.sim.duration = 30.0;
  setup.initial.psi = std::atan(setup.plant.tractor.wheelbase() / radius);
  return setup;
}

TEST(IntegrateStepTest, ConstantAccelerationIsExact) {
  PlantModel plant;
  PlantState s;
  s.tractor.v_x = 1.0;
  const double force = 1500.0, dt = 0.5;
  const PlantState next = IntegrateStep(plant, s, Ideal(0.0, force), 0.0, dt);
  const double a = force / plant.tractor.mass;
  EXPECT_NEAR(next.tractor.v_x, 1.0 + a * dt, 1e-15);
  EXPECT_NEAR(next.tractor.x, dt + 0.5 * a * dt * dt, 1e-15);
  EXPECT_EQ(next.tractor.y, 0.0);
}

TEST(IntegrateStepTest, SteeringLagReachesOneTimeConstant) {
  PlantModel plant;
  PlantState s;
  const double dt = 1e-3;
  for (int k = 0; k < 200; ++k) s = IntegrateStep(plant, s, Steer(1.0), k * dt, dt);
  EXPECT_NEAR(s.tractor.psi, 0.632120558828557678, 1e-9);
}

TEST(IntegrateStepTest, FourthOrderConvergence) {
  PlantModel plant;
  plant.trailers = {{2630.0, 0.5, 2.5, 0.02}, {630.0, 0.4, 2.5, 0.02}};
  plant.force_source = ForceSource::kChain;
  PlantState start;
  start.tractor = {0.0, 0.0, 0.0, 1.5, 0.1};
  start.chain.headings = {-0.2, -0.1};
  const PlantInputs in = Steer(0.4, 120.0);

  auto run = [&](int n) {
    PlantState s = start;
    const double dt = 1.0 / n;
    for (int k = 0; k < n; ++k) s = IntegrateStep(plant, s, in, k * dt, dt);
    return s;
  };
  const PlantState exact = run(2048);
  auto error = [&](const PlantState& s) {
    return std::abs(s.tractor.psi - exact.tractor.psi) +
           std::abs(s.tractor.v_x - exact.tractor.v_x) +
           std::abs(s.tractor.theta - exact.tractor.theta) +
           std::abs(s.chain.headings[1] - exact.chain.headings[1]);
  };
  const double ratio = error(run(32)) / error(run(64));
  EXPECT_GT(ratio, 14.0);
  EXPECT_LT(ratio, 18.0);
}

TEST(IntegrateStepTest, HeldSteeringKeepsSpeedAndCircle) {
  PlantModel plant;
  PlantState s;
  s.tractor = {0.0, 0.0, 0.0, 1.2, 0.25};
  const double radius = plant.tractor.wheelbase() / std::tan(0.25);
  const double dt = 1e-2;
  for (int k = 0; k < 10000; ++k) s = IntegrateStep(plant, s, Steer(0.25), k * dt, dt);
  EXPECT_NEAR(s.tractor.v_x, 1.2, 1e-12);
  EXPECT_EQ(s.tractor.psi, 0.25);
  EXPECT_NEAR(std::hypot(s.tractor.x, s.tractor.y - radius), radius, 1e-9);
}

TEST(IntegrateStepTest, RejectsNonPositiveStep) {
  EXPECT_THROW(IntegrateStep(PlantModel{}, PlantState{}, Steer(0.0), 0.0, 0.0),
               DomainError);
}

TEST(PlantDerivativeTest, ChainForceIsSelfConsistent) {
  PlantModel plant;
  plant.trailers = {{2630.0, 0.5, 2.5, 0.02}, {630.0, 0.4, 2.5, 0.02}};
  plant.force_source = ForceSource::kChain;
  PlantState s;
  s.tractor = {0.0, 0.0, 0.3, 1.0, 0.2};
  s.chain.headings = {0.1, -0.05};
  const PlantInputs in = Steer(0.3, 150.0);
  const PlantRates r = PlantDerivative(plant, s, in, 0.0);

  const auto k = ComputeCoefficients(plant.tractor, 0.2, r.psi_dot, 1.0);
  EXPECT_NEAR(r.tractor.v_x_dot,
              k.phi1 + k.phi2 * (r.drive_force - r.hitch.hx) - k.phi3 * r.hitch.hy,
              1e-12);
  BodyMotion m{0.3, 1.0, r.tractor.theta_dot, r.tractor.v_x_dot, 0.0};
  const double l = plant.tractor.wheelbase();
  const double c = SteeringCurvature(plant.tractor, 0.2);
  m.yaw_accel = r.tractor.v_x_dot * c + (1.0 / l + l * c * c) * r.psi_dot;
  const HitchForce h = QuasiStaticHitchForce(m, s.chain, plant.trailers);
  EXPECT_NEAR(h.hx, r.hitch.hx, 1e-9);
  EXPECT_NEAR(h.hy, r.hitch.hy, 1e-9);
}

TEST(PlantModelTest, Validate) {
  PlantModel plant;
  plant.trailers = {{630.0, 0.3, 2.5, 0.02}};
  EXPECT_THROW(plant.Validate(), ConfigError);
  plant.trailers[0].hitch_offset = plant.tractor.c;
  EXPECT_NO_THROW(plant.Validate());
  plant.force_source = ForceSource::kReplay;
  EXPECT_THROW(plant.Validate(), ConfigError);
  plant.trailers.clear();
  plant.force_source = ForceSource::kChain;
  EXPECT_THROW(plant.Validate(), ConfigError);
}

TEST(SimConfigTest, ControlRatio) {
  SimConfig cfg;
  EXPECT_EQ(cfg.ControlRatio(), 20);
  cfg.dt_control = 2.5e-3;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg.dt_control = 1e-3;
  EXPECT_EQ(cfg.ControlRatio(), 1);
  cfg.duration = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(SimulationSetupTest, Validate) {
  SimulationSetup setup = CircleSetup();
  EXPECT_NO_THROW(setup.Validate());
  setup.initial.hitch_angles = {0.1};
  EXPECT_THROW(setup.Validate(), ConfigError);
  setup.initial.hitch_angles.clear();
  setup.plant.trailers = {{630.0, 0.5, 2.5, 0.02}};
  setup.plant.force_source = ForceSource::kChain;
  setup.sim.timing = ControlTiming::kContinuous;
  EXPECT_THROW(setup.Validate(), ConfigError);
  setup.trajectory = nullptr;
  EXPECT_THROW(setup.Validate(), ConfigError);
}

TEST(SignedPathErrorTest, NegativeLeftOfPath) {
  EXPECT_DOUBLE_EQ(SignedPathError({3.0, 4.0, 0.0, 0.0}), -5.0);
  EXPECT_DOUBLE_EQ(SignedPathError({3.0, -4.0, 0.0, 0.0}), 5.0);
  EXPECT_DOUBLE_EQ(SignedPathError({-2.0, 0.0, 0.0, 0.0}), 2.0);
}

TEST(RunClosedLoopTest, StartingOnTheReferenceStaysOnIt) {
  const SimResult result = RunClosedLoop(CircleSetup());
  ASSERT_TRUE(result.summary.completed);
  EXPECT_LT(result.summary.max_abs_path_error, 1e-3);
  EXPECT_EQ(result.log.size(), 30001u);
  EXPECT_DOUBLE_EQ(result.log.back().t, 30.0);
}

TEST(RunClosedLoopTest, StraightEquilibriumHolds) {
  SimulationSetup setup;
  GeneratorSpec spec;
  spec.kind = TrajectoryKind::kLine;
  setup.trajectory = MakeGenerator(spec, setup.plant.tractor);
  setup.sim.duration = 5.0;
  const SimResult result = RunClosedLoop(setup);
  ASSERT_TRUE(result.summary.completed);
  for (const auto& rec : result.log) {
    EXPECT_LT(rec.v1, 1e-24);
    EXPECT_LT(rec.v2, 1e-24);
  }
}

TEST(RunClosedLoopTest, ConvergesFromInitialError) {
  SimulationSetup setup = CircleSetup();
  setup.sim.duration = 60.0;
  setup.initial.error = {0.5, -0.5, 0.1, 0.1};
  const SimResult result = RunClosedLoop(setup);
  ASSERT_TRUE(result.summary.completed);
  EXPECT_LT(result.summary.final_abs_path_error, 1e-2);
  EXPECT_LT(std::abs(result.summary.final_error.v_e), 1e-3);
  EXPECT_EQ(result.summary.controller_faults, 0u);
}

TEST(RunClosedLoopTest, DeterministicForSeed) {
  SimulationSetup setup = CircleSetup();
  setup.sim.duration = 10.0;
  setup.sensor.noise_sigma = 30.0;
  setup.plant.trailers = {{630.0, 0.5, 2.5, 0.02}};
  setup.plant.force_source = ForceSource::kChain;
  setup.sim.seed = 5;
  const SimResult a = RunClosedLoop(setup);
  const SimResult b = RunClosedLoop(setup);
  setup.sim.seed = 6;
  const SimResult c = RunClosedLoop(setup);
  ASSERT_EQ(a.log.size(), b.log.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    ASSERT_EQ(LogValues(a.log[i]), LogValues(b.log[i]));
    differs = differs || a.log[i].hitch_measured.hx != c.log[i].hitch_measured.hx;
  }
  EXPECT_TRUE(differs);
}

TEST(RunClosedLoopTest, InsensitiveToControlRate) {
  auto rms_path_error = [](double dt_control) {
    SimulationSetup setup = CircleSetup();
    setup.sim.duration = 40.0;
    setup.sim.dt_control = dt_control;
    setup.initial.error = {0.5, 0.5, 0.1, 0.1};
    const SimResult result = RunClosedLoop(setup);
    double sum = 0.0;
    for (const auto& rec : result.log) sum += rec.e_p * rec.e_p;
    return std::sqrt(sum / static_cast<double>(result.log.size()));
  };
  const double slow = rms_path_error(2e-2);
  const double fast = rms_path_error(1e-3);
  EXPECT_LT(std::abs(slow - fast), 0.2 * fast);
}

TEST(RunClosedLoopTest, AbortKeepsPartialLog) {
  // A pull far beyond the propulsion limit drives the tractor backwards, out
  // of the speed range of the propulsion map.
  SimulationSetup setup = CircleSetup();
  setup.plant.force_source = ForceSource::kReplay;
  setup.plant.replay = ForceProfile({{0.0, 0.0, 0.0}, {1.0, 40000.0, 0.0}});
  setup.sim.duration = 20.0;
  const SimResult result = RunClosedLoop(setup);
  EXPECT_FALSE(result.summary.completed);
  EXPECT_FALSE(result.summary.abort_reason.empty());
  ASSERT_FALSE(result.log.empty());
  EXPECT_LE(result.log.back().t, result.summary.abort_time);
  EXPECT_GT(result.summary.abort_time, 0.0);
  EXPECT_LT(result.summary.abort_time, 20.0);
}

TEST(LyapunovAuditTest, IdealContinuousIdentityHolds) {
  SimulationSetup setup = CircleSetup();
  setup.sim.timing = ControlTiming::kContinuous;
  setup.sim.actuation = ActuationModel::kIdeal;
  setup.sim.duration = 20.0;
  setup.initial.error = {1.0, 1.0, 0.3, 0.2};
  const SimResult result = RunClosedLoop(setup);
  ASSERT_TRUE(result.summary.completed);
  AuditOptions options;
  options.function = LyapunovFunction::kV1;
  const AuditReport report = LyapunovAudit(result.log, options);
  EXPECT_TRUE(report.passed);
  EXPECT_LT(report.max_relative_residual, 1e-3);
  EXPECT_EQ(report.increases, 0u);
  EXPECT_GT(report.checked, 19000u);
}

TEST(LyapunovAuditTest, DetectsBrokenIdentity) {
  SimulationSetup setup = CircleSetup();
  setup.sim.timing = ControlTiming::kContinuous;
  setup.sim.actuation = ActuationModel::kIdeal;
  setup.sim.duration = 5.0;
  setup.initial.error = {1.0, 1.0, 0.3, 0.2};
  SimResult result = RunClosedLoop(setup);
  for (auto& rec : result.log) rec.v1_rate_model *= 0.5;
  AuditOptions options;
  options.function = LyapunovFunction::kV1;
  const AuditReport report = LyapunovAudit(result.log, options);
  EXPECT_FALSE(report.passed);
  EXPECT_GT(report.identity_violations, 0u);
}

TEST(LogCsvTest, RoundTrip) {
  SimulationSetup setup = CircleSetup();
  setup.sim.duration = 2.0;
  setup.sim.log_decimation = 7;
  setup.initial.error = {0.2, 0.1, 0.05, 0.0};
  const SimResult result = RunClosedLoop(setup);
  EXPECT_EQ(result.log.size(), 287u);  // every 7th step plus the final one
  const auto path = testing::ScratchDir() / "log.csv";
  WriteLogCsv(path, result.log);
  const auto back = ReadLogCsv(path);
  ASSERT_EQ(back.size(), result.log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(LogValues(back[i]), LogValues(result.log[i]));
  }
  EXPECT_EQ(LogColumns().size(), kLogColumnCount);
  EXPECT_EQ(LogColumns().front(), "t");
  EXPECT_EQ(LogColumns().back(), "e_p");
}

TEST(SummaryTest, FormatsAbortAndAudit) {
  SimSummary summary;
  summary.completed = false;
  summary.abort_reason = "jack-knife";
  summary.abort_time = 3.5;
  AuditReport audit;
  audit.passed = false;
  const std::string text = FormatSummary(summary, &audit);
  EXPECT_NE(text.find("completed: false"), std::string::npos);
  EXPECT_NE(text.find("jack-knife"), std::string::npos);
  EXPECT_NE(text.find("audit"), std::string::npos);
  EXPECT_EQ(FormatSummary(summary, nullptr).find("audit"), std::string::npos);
}

}  // namespace
}  // namespace towtrack

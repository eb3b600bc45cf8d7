#include "towtrack/trailer_forces.h"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"
#include "towtrack/errors.h"

namespace towtrack {
namespace {

BodyMotion Tractor(double heading, double speed, double yaw_rate,
                   double accel = 0.0, double yaw_accel = 0.0) {
  return {heading, speed, yaw_rate, accel, yaw_accel};
}

// Settled hitch angles of a chain following a circle at constant speed v and
// yaw rate w: every body turns at w, so each hitch angle solves
// v_prev sin(g) - d w cos(g) = l w.
std::vector<double> SteadyCircleAngles(double v, double w,
                                       const std::vector<TrailerParams>& trailers) {
  std::vector<double> out;
  double speed = v;
  for (const auto& p : trailers) {
    const double reach = std::hypot(speed, p.hitch_offset * w);
    const double phase = std::atan2(p.hitch_offset * w, speed);
    const double g = phase + std::asin(p.drawbar_length * w / reach);
    out.push_back(g);
    speed = speed * std::cos(g) + p.hitch_offset * w * std::sin(g);
  }
  return out;
}

TEST(ChainKinematicsTest, AlignedChainMovesWithTractor) {
  const std::vector<TrailerParams> trailers(3, TrailerParams{630.0, 0.4, 2.5, 0.02});
  const ChainState chain{{0.2, 0.2, 0.2}};
  const auto motion = ChainKinematics(Tractor(0.2, 1.3, 0.0), chain, trailers);
  for (const auto& m : motion) {
    EXPECT_DOUBLE_EQ(m.speed, 1.3);
    EXPECT_DOUBLE_EQ(m.yaw_rate, 0.0);
  }
}

TEST(ChainKinematicsTest, SingleOnAxleTrailer) {
  const std::vector<TrailerParams> trailers{{630.0, 0.0, 2.0, 0.02}};
  const auto motion = ChainKinematics(Tractor(0.3, 1.0, 0.0), ChainState{{0.0}}, trailers);
  EXPECT_NEAR(motion[0].yaw_rate, 0.147760103330669788, 1e-15);
  EXPECT_NEAR(motion[0].speed, 0.955336489125606020, 1e-15);
}

TEST(ChainKinematicsTest, OnAxleLimitDropsOffsetTerms) {
  for (double w : {-0.4, 0.0, 0.25}) {
    for (double g : {-0.7, 0.1, 1.0}) {
      const std::vector<TrailerParams> trailers{{630.0, 0.0, 2.5, 0.02}};
      const auto m = ChainKinematics(Tractor(g, 1.1, w), ChainState{{0.0}}, trailers);
      EXPECT_DOUBLE_EQ(m[0].yaw_rate, 1.1 * std::sin(g) / 2.5);
      EXPECT_DOUBLE_EQ(m[0].speed, 1.1 * std::cos(g));
    }
  }
}

TEST(ChainKinematicsTest, DerivativesMatchFiniteDifferences) {
  const std::vector<TrailerParams> trailers{{630.0, 0.5, 2.5, 0.02},
                                            {630.0, 0.4, 3.0, 0.02}};
  const BodyMotion tractor = Tractor(0.4, 1.2, 0.15, 0.3, -0.05);
  const ChainState chain{{0.1, -0.2}};
  const auto base = ChainKinematics(tractor, chain, trailers);
  const double h = 1e-6;
  auto advanced = [&](double s) {
    BodyMotion t = tractor;
    t.heading += tractor.yaw_rate * s + 0.5 * tractor.yaw_accel * s * s;
    t.speed += tractor.accel * s;
    t.yaw_rate += tractor.yaw_accel * s;
    ChainState c = chain;
    for (std::size_t i = 0; i < c.headings.size(); ++i) {
      c.headings[i] += base[i].yaw_rate * s;
    }
    return ChainKinematics(t, c, trailers);
  };
  const auto plus = advanced(h);
  const auto minus = advanced(-h);
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_NEAR(base[i].accel, (plus[i].speed - minus[i].speed) / (2 * h), 1e-6);
    EXPECT_NEAR(base[i].yaw_accel, (plus[i].yaw_rate - minus[i].yaw_rate) / (2 * h),
                1e-6);
  }
}

TEST(ChainKinematicsTest, JackKnifeAborts) {
  const std::vector<TrailerParams> trailers{{630.0, 0.5, 2.5, 0.02},
                                            {630.0, 0.4, 2.5, 0.02}};
  try {
    ChainKinematics(Tractor(0.0, 1.0, 0.0), ChainState{{0.1, 0.1 - M_PI / 2.0}},
                    trailers);
    FAIL();
  } catch (const JackKnifeError& e) {
    EXPECT_EQ(e.trailer(), 1u);
    EXPECT_NEAR(std::abs(e.angle()), M_PI / 2.0, 1e-12);
  }
}

TEST(ChainKinematicsStepTest, StraightTowingStraightensTheChain) {
  const std::vector<TrailerParams> trailers{{2630.0, 0.5, 2.5, 0.02},
                                            {630.0, 0.4, 2.5, 0.02}};
  ChainState chain{{-0.3, 0.0}};  // hitch angles 0.3 and -0.3
  const double dt = 0.01;
  std::vector<double> previous = {0.3, 0.3};
  for (int k = 1; k <= 6000; ++k) {
    chain = ChainKinematicsStep(Tractor(0.0, 1.0, 0.0), chain, trailers, dt).chain;
    const auto g = HitchAngles(0.0, chain);
    if (k * dt > 10.0) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        EXPECT_LE(std::abs(g[i]), previous[i] + 1e-15);
        previous[i] = std::abs(g[i]);
      }
    }
  }
  for (double g : HitchAngles(0.0, chain)) EXPECT_LT(std::abs(g), 1e-3);
}

TEST(ChainKinematicsStepTest, SteadyCircleMatchesFixedPoint) {
  const std::vector<TrailerParams> trailers{{2630.0, 0.5, 2.5, 0.02},
                                            {630.0, 0.4, 2.5, 0.02},
                                            {630.0, 0.0, 3.0, 0.02}};
  const double v = 1.0, w = 0.1;
  ChainState chain{{0.0, 0.0, 0.0}};
  double heading = 0.0;
  const double dt = 0.01;
  for (int k = 0; k < 30000; ++k) {
    chain = ChainKinematicsStep(Tractor(heading, v, w), chain, trailers, dt).chain;
    heading += w * dt;
  }
  const auto oracle = SteadyCircleAngles(v, w, trailers);
  const auto settled = HitchAngles(heading, chain);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    EXPECT_NEAR(settled[i], oracle[i], 1e-6) << i;
  }
}

TEST(QuasiStaticHitchForceTest, RollingResistanceOfAlignedChain) {
  const std::vector<TrailerParams> trailers{{2630.0, 0.5, 2.5, 0.02},
                                            {630.0, 0.4, 2.5, 0.02}};
  const HitchForce h =
      QuasiStaticHitchForce(Tractor(0.7, 1.0, 0.0), ChainState{{0.7, 0.7}}, trailers);
  EXPECT_NEAR(h.hx, 639.612, 1e-9);
  EXPECT_NEAR(h.hy, 0.0, 1e-12);
}

TEST(QuasiStaticHitchForceTest, InertiaOfAlignedChain) {
  const std::vector<TrailerParams> trailers{{2630.0, 0.5, 2.5, 0.0},
                                            {630.0, 0.4, 2.5, 0.0}};
  const HitchForce h = QuasiStaticHitchForce(Tractor(0.0, 1.0, 0.0, 0.5),
                                             ChainState{{0.0, 0.0}}, trailers);
  EXPECT_NEAR(h.hx, 0.5 * 3260.0, 1e-9);
  EXPECT_NEAR(h.hy, 0.0, 1e-12);
}

TEST(QuasiStaticHitchForceTest, NoTrailersNoLoad) {
  const HitchForce h = QuasiStaticHitchForce(Tractor(0.0, 1.0, 0.2, 1.0), {}, {});
  EXPECT_EQ(h.hx, 0.0);
  EXPECT_EQ(h.hy, 0.0);
}

TEST(QuasiStaticHitchForceTest, FrictionlessCruiseIsForceFree) {
  const std::vector<TrailerParams> trailers{{630.0, 0.5, 2.5, 0.0},
                                            {630.0, 0.4, 2.5, 0.0}};
  const HitchForce h =
      QuasiStaticHitchForce(Tractor(1.0, 2.0, 0.0), ChainState{{1.0, 1.0}}, trailers);
  EXPECT_EQ(h.hx, 0.0);
  EXPECT_EQ(h.hy, 0.0);
}

TEST(QuasiStaticHitchForceTest, SingleTrailerDrawbarForceIsAlongTheBar) {
  // With one trailer and d = 0 at its rear, the pin force has no normal
  // component in the trailer frame, so it points along the trailer axis.
  const std::vector<TrailerParams> trailers{{630.0, 0.5, 2.5, 0.02}};
  const double gamma = 0.3;
  const HitchForce h =
      QuasiStaticHitchForce(Tractor(0.0, 1.0, 0.0), ChainState{{-gamma}}, trailers);
  EXPECT_NEAR(std::atan2(h.hy, h.hx), gamma, 1e-12);
}

TEST(ReplayForceTest, InterpolatesAndHolds) {
  const ForceProfile profile({{0.0, 100.0, 0.0}, {10.0, 300.0, 0.0}});
  EXPECT_DOUBLE_EQ(ReplayForce(profile, 5.0).hx, 200.0);
  EXPECT_DOUBLE_EQ(ReplayForce(profile, -1.0).hx, 100.0);
  EXPECT_DOUBLE_EQ(ReplayForce(profile, 20.0).hx, 300.0);
  EXPECT_DOUBLE_EQ(ReplayForce(profile, 20.0).hy, 0.0);
}

TEST(ReplayForceTest, RejectsMalformedProfiles) {
  EXPECT_THROW(ForceProfile(std::vector<ForceSample>{}), IngestionError);
  EXPECT_THROW(ForceProfile({{0.0, 1.0, 0.0}, {0.0, 2.0, 0.0}}), IngestionError);

  const auto dir = testing::ScratchDir();
  const auto back = testing::WriteText(dir / "back.csv",
                                       "t,Hx,Hy\n0,1,0\n1,2,0\n0.5,3,0\n");
  try {
    ReadForceProfileCsv(back);
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.row(), 4u);
  }
  const auto cell = testing::WriteText(dir / "cell.csv", "t,Hx,Hy\n0,1,0\n1,,0\n");
  try {
    ReadForceProfileCsv(cell);
    FAIL();
  } catch (const IngestionError& e) {
    EXPECT_EQ(e.row(), 3u);
  }
  const auto ok = testing::WriteText(dir / "ok.csv", "t,Hx,Hy\n0,1,2\n1,3,4\n");
  EXPECT_DOUBLE_EQ(ReplayForce(ReadForceProfileCsv(ok), 0.5).hy, 3.0);
}

TEST(ForceSensorTest, NoiselessSensorHoldsTruth) {
  SensorModel model;
  model.sample_period = 0.01;
  ForceSensor sensor(model, 1);
  EXPECT_EQ(sensor.Measure({10.0, 1.0}, 0.0).hx, 10.0);
  EXPECT_EQ(sensor.Measure({20.0, 2.0}, 0.005).hx, 10.0);
  EXPECT_EQ(sensor.Measure({30.0, 3.0}, 0.01).hx, 30.0);
  EXPECT_EQ(sensor.Measure({40.0, 4.0}, 0.0199).hy, 3.0);
}

TEST(ForceSensorTest, BiasAndClamp) {
  SensorModel model;
  model.bias = 5.0;
  ForceSensor sensor(model, 1);
  const HitchForce m = sensor.Measure({60000.0, -100.0}, 0.0);
  EXPECT_EQ(m.hx, 50000.0);
  EXPECT_EQ(m.hy, -95.0);
  ForceSensor low(model, 1);
  EXPECT_EQ(low.Measure({0.0, -70000.0}, 0.0).hy, -50000.0);
}

TEST(ForceSensorTest, SeededNoiseIsReproducible) {
  SensorModel model;
  model.noise_sigma = 50.0;
  ForceSensor a(model, 42), b(model, 42), c(model, 43);
  bool differs = false;
  for (int k = 0; k < 500; ++k) {
    const double t = k * 0.01;
    const HitchForce ma = a.Measure({100.0, 0.0}, t);
    const HitchForce mb = b.Measure({100.0, 0.0}, t);
    const HitchForce mc = c.Measure({100.0, 0.0}, t);
    ASSERT_EQ(ma.hx, mb.hx);
    ASSERT_EQ(ma.hy, mb.hy);
    differs = differs || ma.hx != mc.hx;
  }
  EXPECT_TRUE(differs);
}

TEST(ForceSensorTest, NoiseHasTheConfiguredSpread) {
  SensorModel model;
  model.noise_sigma = 50.0;
  ForceSensor sensor(model, 7);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double x = sensor.Measure({0.0, 0.0}, k * model.sample_period).hx;
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.0, 2.0);
  EXPECT_NEAR(std::sqrt(sum_sq / n - mean * mean), 50.0, 1.5);
}

TEST(TrailerParamsTest, Validate) {
  EXPECT_NO_THROW(TrailerParams{}.Validate());
  EXPECT_THROW((TrailerParams{0.0, 0.0, 2.5, 0.02}.Validate()), ConfigError);
  EXPECT_THROW((TrailerParams{630.0, -0.1, 2.5, 0.02}.Validate()), ConfigError);
  EXPECT_THROW((TrailerParams{630.0, 0.0, 0.0, 0.02}.Validate()), ConfigError);
  EXPECT_THROW((TrailerParams{630.0, 0.0, 2.5, 0.1}.Validate()), ConfigError);
}

}  // namespace
}  // namespace towtrack

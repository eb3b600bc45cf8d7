#include "towtrack/vehicle_model.h"

#include <cmath>

#include <gtest/gtest.h>

#include "towtrack/errors.h"

namespace towtrack {
namespace {

TEST(ComputeCoefficientsTest, StraightWheelsCollapseToPointMass) {
  const TractorParams p;
  const DynamicsCoefficients k = ComputeCoefficients(p, 0.0, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(k.phi1, 0.0);
  EXPECT_DOUBLE_EQ(k.phi2, 1.0 / 3000.0);
  EXPECT_DOUBLE_EQ(k.phi3, 0.0);
  EXPECT_DOUBLE_EQ(k.z, 12000.0);
}

TEST(ComputeCoefficientsTest, MatchesHighPrecisionEvaluation) {
  // 50-digit evaluation of the four defining formulas at psi = 0.3,
  // psi_dot = 0.1, v_x = 2 with the default parameters.
  const DynamicsCoefficients k = ComputeCoefficients(TractorParams{}, 0.3, 0.1, 2.0);
  EXPECT_NEAR(k.phi1, -0.0374520497978548835, 1e-15);
  EXPECT_NEAR(k.phi2, 0.000315710818307020987, 1e-18);
  EXPECT_NEAR(k.phi3, 0.0000488304002481395261, 1e-18);
  EXPECT_NEAR(k.z, 11563.3390372741957, 1e-9);
}

TEST(ComputeCoefficientsTest, SteeringParity) {
  const TractorParams p;
  for (double psi : {0.05, 0.3, 0.5, 1.2}) {
    const auto pos = ComputeCoefficients(p, psi, 0.2, 1.5);
    const auto neg = ComputeCoefficients(p, -psi, 0.2, 1.5);
    EXPECT_DOUBLE_EQ(pos.phi1, -neg.phi1);
    EXPECT_DOUBLE_EQ(pos.phi3, -neg.phi3);
    EXPECT_DOUBLE_EQ(pos.phi2, neg.phi2);
    EXPECT_DOUBLE_EQ(pos.z, neg.z);
  }
}

TEST(ComputeCoefficientsTest, PhiOneVanishesWithoutSteeringMotion) {
  const TractorParams p;
  EXPECT_EQ(ComputeCoefficients(p, 0.4, 0.0, 2.0).phi1, 0.0);
  EXPECT_EQ(ComputeCoefficients(p, 0.0, 0.7, 2.0).phi1, 0.0);
}

TEST(ComputeCoefficientsTest, PositiveOverDenseSteeringGrid) {
  const TractorParams p;
  const double limit = M_PI / 2.0 - kSteerSingularityGuard;
  for (int i = -2000; i <= 2000; ++i) {
    const double psi = limit * (i / 2000.0) * 0.999999;
    const auto k = ComputeCoefficients(p, psi, 0.3, 1.0);
    ASSERT_GT(k.z, 0.0) << psi;
    ASSERT_GT(k.phi2, 0.0) << psi;
  }
}

TEST(ComputeCoefficientsTest, RejectsSingularSteering) {
  const TractorParams p;
  EXPECT_THROW(ComputeCoefficients(p, M_PI / 2.0, 0.0, 1.0), SingularSteeringError);
  EXPECT_THROW(ComputeCoefficients(p, -M_PI / 2.0 + 1e-4, 0.0, 1.0),
               SingularSteeringError);
  EXPECT_NO_THROW(ComputeCoefficients(p, M_PI / 2.0 - 2e-3, 0.0, 1.0));
}

TEST(StateDerivativeTest, CoastingStraight) {
  const TractorState s{0.0, 0.0, 0.0, 1.0, 0.0};
  const StateRate r = StateDerivative(TractorParams{}, s, 0.0, {}, 0.0);
  EXPECT_DOUBLE_EQ(r.x_dot, 1.0);
  EXPECT_DOUBLE_EQ(r.y_dot, 0.0);
  EXPECT_DOUBLE_EQ(r.theta_dot, 0.0);
  EXPECT_DOUBLE_EQ(r.v_x_dot, 0.0);
}

TEST(StateDerivativeTest, NetForceOverMassWhenStraight) {
  const TractorState s{0.0, 0.0, 0.0, 1.0, 0.0};
  const StateRate r = StateDerivative(TractorParams{}, s, 3000.0, {1500.0, 0.0}, 0.0);
  EXPECT_DOUBLE_EQ(r.v_x_dot, 0.5);
}

TEST(StateDerivativeTest, YawRateFromSteering) {
  const TractorState s{0.0, 0.0, 0.0, 1.0, 0.2};
  const StateRate r = StateDerivative(TractorParams{}, s, 0.0, {}, 0.0);
  EXPECT_NEAR(r.theta_dot, 0.101355017754336242, 1e-15);
}

TEST(StateDerivativeTest, MirrorSymmetryInSteeringAndLateralLoad) {
  // Mirroring the manoeuvre negates psi and H_y: the yaw rate flips while
  // phi3 H_y, and with it the longitudinal acceleration, is unchanged.
  const TractorParams p;
  const TractorState s{0.0, 0.0, 0.3, 1.2, 0.25};
  TractorState mirrored = s;
  mirrored.psi = -s.psi;
  const StateRate a = StateDerivative(p, s, 500.0, {200.0, 800.0}, 0.0);
  const StateRate b = StateDerivative(p, mirrored, 500.0, {200.0, -800.0}, 0.0);
  EXPECT_DOUBLE_EQ(a.theta_dot, -b.theta_dot);
  EXPECT_DOUBLE_EQ(a.v_x_dot, b.v_x_dot);

  // Flipping the steering alone negates the lateral-load term.
  const StateRate c = StateDerivative(p, mirrored, 500.0, {200.0, 800.0}, 0.0);
  const StateRate no_lateral = StateDerivative(p, s, 500.0, {200.0, 0.0}, 0.0);
  EXPECT_NEAR(a.v_x_dot - no_lateral.v_x_dot, -(c.v_x_dot - no_lateral.v_x_dot),
              1e-15);
}

TEST(StateDerivativeTest, PointMassBalanceAtZeroSteering) {
  const TractorParams p;
  const TractorState s{1.0, -2.0, 0.7, 1.7, 0.0};
  for (double f : {-2000.0, 0.0, 1234.5}) {
    const StateRate r = StateDerivative(p, s, f, {321.0, 999.0}, 0.4);
    EXPECT_NEAR(r.v_x_dot * p.mass, f - 321.0, 1e-9);
  }
}

TEST(SteeringRateTest, FirstOrderLag) {
  const TractorParams p;
  EXPECT_EQ(SteeringRate(p, 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(SteeringRate(p, 0.0, 0.4), 2.0);
  EXPECT_DOUBLE_EQ(SteeringRate(p, 0.3, 0.1), -1.0);
}

TEST(ConstraintResidualsTest, ReducedModelSatisfiesBothConstraints) {
  const TractorParams p;
  for (double theta : {-2.0, 0.0, 0.4, 3.0}) {
    for (double psi : {-0.5, 0.0, 0.3}) {
      const TractorState s{1.0, 2.0, theta, 1.3, psi};
      const StateRate r = StateDerivative(p, s, 100.0, {50.0, 20.0}, 0.1);
      const auto [rear, front] = ConstraintResiduals(p, s, r);
      EXPECT_NEAR(rear, 0.0, 1e-10);
      EXPECT_NEAR(front, 0.0, 1e-10);
    }
  }
}

TEST(ConstraintResidualsTest, LateralPerturbationShowsInRearResidual) {
  const TractorParams p;
  const TractorState s{0.0, 0.0, 0.4, 1.0, 0.2};
  StateRate r = StateDerivative(p, s, 0.0, {}, 0.0);
  r.y_dot += 0.1;
  EXPECT_NEAR(ConstraintResiduals(p, s, r).first, 0.1 * std::cos(0.4), 1e-12);
}

TEST(ConstraintResidualsTest, StraightMotion) {
  const TractorParams p;
  const TractorState s{0.0, 0.0, 0.0, 2.0, 0.0};
  const auto [rear, front] = ConstraintResiduals(p, s, {2.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(rear, 0.0);
  EXPECT_EQ(front, 0.0);
}

TEST(TractorParamsTest, ValidateRejectsNonPhysicalValues) {
  EXPECT_NO_THROW(TractorParams{}.Validate());
  auto bad = [](auto mutate) {
    TractorParams p;
    mutate(p);
    return p;
  };
  EXPECT_THROW(bad([](auto& p) { p.mass = 0.0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.yaw_inertia = -1.0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.a = 0.0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.b = -0.1; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.c = -0.1; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.tau = 0.0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.psi_max = M_PI / 2.0; }).Validate(), ConfigError);
  EXPECT_THROW(bad([](auto& p) { p.psi_max = 0.0; }).Validate(), ConfigError);
}

}  // namespace
}  // namespace towtrack

#include <gtest/gtest.h>

#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/geometry.hpp"
#include "alqr/verify.hpp"

using namespace alqr;

TEST(ClosedLoop, OwnFeedbackIsStable) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const Matrix d = closedLoop(theta0, theta0, cost);
  EXPECT_LT(spectralRadius(d).radius, 1.0);
  EXPECT_LE((extendedFeedback(Matrix::Zero(3, 3)).topRows(3) - Matrix::Identity(3, 3)).norm(), 0.0);
}

TEST(ClosedLoop, ZeroGainOwnerReturnsA) {
  const DynamicsParameter owner(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const DynamicsParameter theta(Matrix::Constant(2, 2, 0.3), Matrix::Identity(2, 2));
  const CostSpec cost{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  EXPECT_LE((closedLoop(theta, owner, cost) - theta.a).norm(), 1e-14);
}

TEST(P0, ReferenceSystemIsAPoint) {
  EXPECT_EQ(constructP0(presetDynamics("reference"), presetCost("reference")).dimension(), 0);
}

TEST(P0, ZeroDriftGivesFullDimension) {
  Matrix b(2, 2);
  b << 1.0, 0.5, 0.0, 1.0;
  const DynamicsParameter theta0(Matrix::Zero(2, 2), b);
  EXPECT_EQ(constructP0(theta0, CostSpec{Matrix::Identity(2, 2), Matrix::Identity(2, 2)}).dimension(), 4);
}

TEST(P0, DimensionFormulaAndDoubleMembership) {
  Rng rng(5);
  for (const RankInstance& inst : rankFamily(2, 31)) {
    const AffineSubspace p0 = constructP0(inst.theta0, inst.cost);
    EXPECT_EQ(p0.dimension(), (3 - inst.rankA) * 3) << "rank A0 = " << inst.rankA;
    EXPECT_LE(p0.orthonormalityError(), 1e-10);
    for (int s = 0; s < 3 && p0.dimension() > 0; ++s) {
      const Matrix pt = p0.point(standardGaussian(p0.dimension(), 1, rng));
      const MembershipReport m =
          verifyP0Membership(DynamicsParameter::fromStacked(pt, 3), inst.theta0, inst.cost);
      EXPECT_TRUE(m.sameFeedback);
      EXPECT_TRUE(m.sameClosedLoop);
      EXPECT_LE(m.riccatiGap, 1e-7);
    }
  }
}

TEST(P0, GenericPerturbationFailsMembership) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const auto theta = DynamicsParameter::fromStacked(theta0.stacked() + 0.01 * standardGaussian(3, 6, rng), 3);
    const MembershipReport m = verifyP0Membership(theta, theta0, cost);
    EXPECT_FALSE(m.sameFeedback && m.sameClosedLoop);
  }
}

TEST(NullSpace, DirectionsAnnihilateTheExtendedFeedback) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const auto dirs = nullSpaceDirections(theta0, cost);
  EXPECT_EQ(dirs.size(), 9u);
  const Matrix lt = extendedFeedback(solveRiccati(theta0, cost).l);
  for (const Matrix& d : dirs) EXPECT_LE((d * lt).norm(), 1e-10);
}

TEST(Tangent, ReferenceSystemHasDimensionNine) {
  const TangentReport t = tangentDimension(presetDynamics("reference"), presetCost("reference"), 18);
  EXPECT_EQ(t.dimension, 9);
  EXPECT_EQ(t.expected, 9);
}

TEST(Tangent, ZeroDriftIdentityInput) {
  const DynamicsParameter theta0(Matrix::Zero(2, 2), Matrix::Identity(2, 2));
  const TangentReport t =
      tangentDimension(theta0, CostSpec{Matrix::Identity(2, 2), Matrix::Identity(2, 2)}, 8);
  EXPECT_EQ(t.dimension, 4);
}

TEST(Tangent, RankFamily) {
  for (const RankInstance& inst : rankFamily(1, 12)) {
    const TangentReport t = tangentDimension(inst.theta0, inst.cost, 36);
    EXPECT_EQ(t.dimension, 9 + (3 - inst.rankA) * (3 - inst.rankB))
        << "ranks " << inst.rankA << "," << inst.rankB;
  }
}

TEST(Tangent, KernelDirectionsMatchFiniteDifferences) {
  // Along a tangent direction the feedback is stationary to first order.
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const TangentReport t = tangentDimension(theta0, cost, 18);
  for (const Matrix& dir : t.kernel) {
    EXPECT_LE(operatorNorm(feedbackDirectionalDerivative(theta0, cost, dir)), 1e-5);
  }
}

TEST(Unfalsifiable, TruthIsUnfalsifiableAndPerturbationsAreNot) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  EXPECT_TRUE(unfalsifiableTest(theta0, theta0, cost));
  Rng rng(10);
  int tested = 0;
  while (tested < 100) {
    const auto theta = DynamicsParameter::fromStacked(theta0.stacked() + 0.1 * standardGaussian(3, 6, rng), 3);
    try {
      EXPECT_FALSE(unfalsifiableTest(theta, theta0, cost));
      ++tested;
    } catch (const Error&) {
    }
  }
}

TEST(Identifiability, SingletonHoldsTrivially) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const auto r = identifiabilityCheck(SideInformation::singleton(theta0.stacked()), theta0,
                                      presetCost("reference"), 20);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.estimatedConstant, 0.0);
}

TEST(Identifiability, FullSupportWithRankDeficientDriftIsViolated) {
  const RankInstance inst = rankFamily(1, 77)[2];  // rank A0 = 2, rank B0 = 3
  ASSERT_EQ(inst.rankA, 2);
  EXPECT_FALSE(identifiabilityCheck(SideInformation::unconstrained(3, 6), inst.theta0, inst.cost, 100).holds);
}

TEST(Identifiability, ConstructedSubspaceIsBounded) {
  const RankInstance inst = rankFamily(1, 77)[2];
  const SubspaceConstraints sub = identifiableSubspace(inst.theta0, inst.cost);
  EXPECT_EQ(sub.constraints.size(), static_cast<std::size_t>(inst.rankA * 3));
  EXPECT_TRUE(satisfiesDimensionBound(sub.side, inst.theta0));
  const auto r = identifiabilityCheck(sub.side, inst.theta0, inst.cost, 300);
  EXPECT_TRUE(r.holds);
  EXPECT_TRUE(std::isfinite(r.estimatedConstant));
}

TEST(Identifiability, BudgetKindsAreUnsupported) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  EXPECT_THROW(identifiabilityCheck(SideInformation::sparsityBudget(3, 6, 9), theta0, presetCost("reference"), 5), Error);
}

TEST(Lipschitz, FiniteAndStableAcrossRadii) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const double wide = lipschitzDiagnostic(theta0, cost, 0.05, 300).maxRatio;
  const double narrow = lipschitzDiagnostic(theta0, cost, 0.025, 300).maxRatio;
  EXPECT_TRUE(std::isfinite(wide));
  EXPECT_NEAR(wide / narrow, 1.0, 0.5);
}

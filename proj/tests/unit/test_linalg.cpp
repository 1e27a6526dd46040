#include <cmath>

#include <gtest/gtest.h>

#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/linalg.hpp"
#include "alqr/verify.hpp"

using namespace alqr;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST(SpectralRadius, IdentityIsMarginal) {
  const SpectralReport r = spectralRadius(Matrix::Identity(3, 3));
  EXPECT_NEAR(r.radius, 1.0, 1e-12);
  EXPECT_FALSE(r.isStable);
}

TEST(SpectralRadius, RotationBlockUsesComplexModulus) {
  Matrix m(2, 2);
  m << 0.3, -0.4, 0.4, 0.3;
  EXPECT_NEAR(spectralRadius(m).radius, 0.5, 1e-12);
  EXPECT_TRUE(spectralRadius(m).isStable);
}

TEST(SpectralRadius, RejectsNonSquare) {
  try {
    spectralRadius(Matrix::Zero(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonSquare);
  }
}

TEST(Rank, ReferenceA0IsFullRank) {
  EXPECT_EQ(rank(presetDynamics("reference").a), 3);
  EXPECT_NEAR(presetDynamics("reference").a.determinant(), 0.718, 5e-3);
}

TEST(Riccati, ScalarOracle) {
  const DynamicsParameter theta(scalar(0.5), scalar(1.0));
  const RiccatiSolution sol = solveRiccati(theta, CostSpec{scalar(1.0), scalar(1.0)});
  const double k = (0.25 + std::sqrt(4.0625)) / 2.0;
  EXPECT_NEAR(sol.k(0, 0), k, 1e-10);
  EXPECT_NEAR(sol.l(0, 0), -0.5 * k / (k + 1.0), 1e-10);
  EXPECT_NEAR(sol.k(0, 0), 1.1327822, 1e-7);
}

TEST(Riccati, ReferenceSystem) {
  const DynamicsParameter theta = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const RiccatiSolution sol = solveRiccati(theta, cost);
  EXPECT_LE(sol.residual, 1e-9 * (1.0 + operatorNorm(sol.k)));
  EXPECT_TRUE(isSymmetricPositiveDefinite(sol.k));
  EXPECT_LT(spectralRadius(theta.a + theta.b * sol.l).radius, 1.0);
  // cross-check through the closed-loop Lyapunov equation
  const Matrix d = theta.a + theta.b * sol.l;
  const Matrix lyap = solveLyapunov(d, cost.q + sol.l.transpose() * cost.r * sol.l);
  EXPECT_LE(operatorNorm(lyap - sol.k), 1e-8 * (1.0 + operatorNorm(sol.k)));
}

TEST(Riccati, RandomInstancesSatisfyFixedPoint) {
  for (const auto& [theta, cost] : randomInstances(100, 3)) {
    const RiccatiSolution sol = solveRiccati(theta, cost);
    EXPECT_LE(riccatiResidual(theta, cost, sol.k), 1e-9 * (1.0 + operatorNorm(sol.k)));
    EXPECT_LT(spectralRadius(theta.a + theta.b * sol.l).radius, 1.0);
  }
}

TEST(Riccati, UncontrollableUnstableModeIsRejected) {
  Matrix a(2, 2);
  a << 1.5, 0.0, 0.0, 0.5;
  Matrix b(2, 1);
  b << 0.0, 1.0;
  try {
    solveRiccati(DynamicsParameter(a, b), CostSpec{Matrix::Identity(2, 2), scalar(1.0)});
    FAIL() << "expected NotStabilizable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotStabilizable);
  }
}

TEST(Riccati, ZeroDynamicsGivesZeroGain) {
  const DynamicsParameter theta(Matrix::Zero(2, 2), Matrix::Zero(2, 1));
  const RiccatiSolution sol = solveRiccati(theta, CostSpec{Matrix::Identity(2, 2), scalar(1.0)});
  EXPECT_NEAR(sol.l.norm(), 0.0, 1e-14);
  EXPECT_NEAR((sol.k - Matrix::Identity(2, 2)).norm(), 0.0, 1e-14);
}

TEST(Lyapunov, MatchesSeries) {
  Matrix d(2, 2);
  d << 0.5, 0.2, -0.1, 0.3;
  const Matrix p = Matrix::Identity(2, 2);
  Matrix series = Matrix::Zero(2, 2);
  Matrix power = Matrix::Identity(2, 2);
  for (int i = 0; i < 200; ++i) {
    series += power.transpose() * p * power;
    power = power * d;
  }
  EXPECT_LE((solveLyapunov(d, p) - series).norm(), 1e-12);
}

TEST(Lyapunov, RejectsUnstableInput) {
  try {
    solveLyapunov(1.1 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnstableInput);
  }
}

TEST(NullSpace, OrthonormalAndAnnihilating) {
  Matrix m(2, 3);
  m << 1, 2, 3, 2, 4, 6;
  const Matrix n = nullSpace(m);
  EXPECT_EQ(n.cols(), 2);
  EXPECT_LE((m * n).norm(), 1e-12);
  EXPECT_LE((n.transpose() * n - Matrix::Identity(2, 2)).norm(), 1e-12);
}

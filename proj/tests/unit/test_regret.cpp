#include <cmath>

#include <gtest/gtest.h>

#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/policies.hpp"
#include "alqr/regret.hpp"

using namespace alqr;

namespace {

struct Coupled {
  Trajectory traj;
  Trajectory opt;
};

Coupled runRce(Index n, std::uint64_t seed) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  auto pol = rcePolicy(EpisodeSchedule(1.2), 0.1, defaultInitialEstimate(theta0, cost, seed), cost, seed + 1);
  auto opt = optimalPolicy(theta0, cost);
  const auto noise = drawNoise(NoiseModel{NoiseKind::Gaussian, Matrix::Identity(3, 3), seed + 2}, n);
  auto [t, o] = simulateCoupled(theta0, cost, *pol, *opt, noise, Vector::Zero(3));
  return {std::move(t), std::move(o)};
}

Matrix power(const Matrix& m, Index e) {
  Matrix r = Matrix::Identity(m.rows(), m.cols());
  for (Index i = 0; i < e; ++i) r = r * m;
  return r;
}

/// Direct evaluation of the three sums with explicit matrix powers and the
/// full double sum for xi_k; no recursion is shared with decompose().
DecompositionTerms naive(const Trajectory& t, const DynamicsParameter& theta0, const CostSpec& cost, Index n) {
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Matrix d = theta0.a + theta0.b * sol.l;
  const Matrix m = theta0.b.transpose() * sol.k * theta0.b + cost.r;
  auto kj = [&](Index j) { return Matrix(power(d.transpose(), n - j) * sol.k * power(d, n - j)); };
  DecompositionTerms out;
  for (Index k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const Vector gap = (t.gains[i] - sol.l) * t.states[i];
    out.tN += gap.dot(m * gap);
    const Matrix dk = theta0.a + theta0.b * t.gains[i];
    out.sN += t.states[i].dot((kj(k) - dk.transpose() * kj(k + 1) * dk) * t.states[i]);
  }
  for (Index k = 1; k <= n; ++k) {
    Vector xi = Vector::Zero(theta0.stateDim());
    for (Index l = 1; l <= k; ++l) {
      const auto i = static_cast<std::size_t>(k - l);
      xi += 2.0 * power(d, l - 1) * theta0.b * (t.gains[i] - sol.l) * t.states[i];
    }
    const Vector& w = t.noises[static_cast<std::size_t>(k - 1)];
    out.zN += w.dot((sol.k - kj(k)) * xi);
  }
  return out;
}

}  // namespace

TEST(Regret, OptimalPolicyHasZeroRegret) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  auto a = optimalPolicy(theta0, cost);
  auto b = optimalPolicy(theta0, cost);
  const auto noise = drawNoise(NoiseModel{NoiseKind::Gaussian, Matrix::Identity(3, 3), 1}, 500);
  auto [t, o] = simulateCoupled(theta0, cost, *a, *b, noise, Vector::Zero(3));
  const RegretLedger l = computeRegret(t, o, theta0, cost);
  for (Index n = 0; n <= 500; ++n) {
    const auto i = static_cast<std::size_t>(n);
    EXPECT_EQ(l.regret[i], 0.0);
    EXPECT_EQ(l.chi[i], 0.0);
    EXPECT_EQ(l.rho[i], 0.0);
  }
  const DecompositionTerms d = decompose(t, theta0, cost);
  EXPECT_NEAR(d.total(), 0.0, 1e-9);
  EXPECT_EQ(d.tN, 0.0);
}

TEST(Regret, ZeroNoiseFromOriginIsZeroForAnyPolicy) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  auto pol = rcePolicy(EpisodeSchedule(1.2), 0.1, defaultInitialEstimate(theta0, cost, 1), cost, 2);
  auto opt = optimalPolicy(theta0, cost);
  const std::vector<Vector> noise(200, Vector::Zero(3));
  auto [t, o] = simulateCoupled(theta0, cost, *pol, *opt, noise, Vector::Zero(3));
  const RegretLedger l = computeRegret(t, o, theta0, cost);
  EXPECT_EQ(l.regret.back(), 0.0);
  EXPECT_EQ(l.chi.back(), 0.0);
}

TEST(Regret, MismatchedNoiseIsRejected) {
  const Coupled a = runRce(100, 1);
  const Coupled b = runRce(100, 5);
  try {
    computeRegret(a.traj, b.opt, presetDynamics("reference"), presetCost("reference"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MismatchedTrajectories);
  }
}

TEST(Regret, MissingGainsAreRejected) {
  Coupled a = runRce(50, 1);
  a.traj.gains.clear();
  EXPECT_THROW(decompose(a.traj, presetDynamics("reference"), presetCost("reference")), Error);
}

TEST(Decomposition, OneStepHandExpansion) {
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  Matrix l0 = sol.l;
  l0(0, 0) += 0.3;
  l0(2, 1) -= 0.2;
  LinearFeedbackPolicy pol(l0);
  auto opt = optimalPolicy(theta0, cost);
  Vector x0(3);
  x0 << 1.0, -2.0, 0.5;
  const std::vector<Vector> noise(1, Vector::Zero(3));
  auto [t, o] = simulateCoupled(theta0, cost, pol, *opt, noise, x0);
  const double expected =
      x0.dot((l0.transpose() * cost.r * l0 - sol.l.transpose() * cost.r * sol.l) * x0);
  const RegretLedger led = computeRegret(t, o, theta0, cost);
  EXPECT_NEAR(led.regret[1], expected, 1e-12);
  const DecompositionTerms d = decompose(t, theta0, cost, 1);
  EXPECT_EQ(d.zN, 0.0);
  EXPECT_NEAR(d.total(), expected, 1e-10);
}

TEST(Decomposition, RecursionMatchesNaiveSums) {
  const Coupled c = runRce(60, 3);
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  for (Index n : {Index{1}, Index{17}, Index{60}}) {
    const DecompositionTerms fast = decompose(c.traj, theta0, cost, n);
    const DecompositionTerms slow = naive(c.traj, theta0, cost, n);
    EXPECT_NEAR(fast.zN, slow.zN, 1e-8 * (1.0 + std::abs(slow.zN)));
    EXPECT_NEAR(fast.sN, slow.sN, 1e-8 * (1.0 + std::abs(slow.sN)));
    EXPECT_NEAR(fast.tN, slow.tN, 1e-8 * (1.0 + std::abs(slow.tN)));
  }
}

TEST(Decomposition, IdentityHoldsAgainstDirectRegret) {
  const Coupled c = runRce(1000, 11);
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const RegretLedger led = computeRegret(c.traj, c.opt, theta0, cost);
  for (Index n : {Index{10}, Index{100}, Index{1000}}) {
    EXPECT_TRUE(decompositionHolds(led.regret[static_cast<std::size_t>(n)], decompose(c.traj, theta0, cost, n)));
  }
}

TEST(Decomposition, NegatedTBreaksTheIdentity) {
  const Coupled c = runRce(1000, 11);
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  const RegretLedger led = computeRegret(c.traj, c.opt, theta0, cost);
  DecomposeOptions bad;
  bad.negateT = true;
  EXPECT_FALSE(decompositionHolds(led.regret.back(), decompose(c.traj, theta0, cost, 1000, bad)));
}

TEST(Decomposition, LadderClosedForm) {
  const Coupled c = runRce(40, 2);
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  DecomposeOptions keep;
  keep.keepLadder = true;
  const DecompositionTerms d = decompose(c.traj, theta0, cost, 40, keep);
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Matrix dd = theta0.a + theta0.b * sol.l;
  ASSERT_EQ(d.kLadder.size(), 41u);
  EXPECT_LE((d.kLadder[40] - sol.k).norm(), 0.0);
  for (Index j : {0, 7, 39}) {
    const Matrix closed = power(dd.transpose(), 40 - j) * sol.k * power(dd, 40 - j);
    EXPECT_LE((d.kLadder[static_cast<std::size_t>(j)] - closed).norm(), 1e-10);
  }
}

TEST(Decomposition, TIsNonnegativeAndMonotone) {
  const Coupled c = runRce(300, 4);
  const DynamicsParameter theta0 = presetDynamics("reference");
  const CostSpec cost = presetCost("reference");
  double prev = 0.0;
  for (Index n = 10; n <= 300; n += 29) {
    const double t = decompose(c.traj, theta0, cost, n).tN;
    EXPECT_GE(t, prev);
    prev = t;
  }
}

TEST(Curves, SyntheticRegretNormalizesToOne) {
  RegretLedger l;
  l.horizon = 1000;
  l.regret.resize(1001);
  for (Index n = 0; n <= 1000; ++n) {
    l.regret[static_cast<std::size_t>(n)] = n < 2 ? 0.0 : std::sqrt(double(n)) * std::log(double(n));
  }
  for (const CurveRow& r : normalizedCurves(l, {}, logGrid(2, 1000))) {
    EXPECT_NEAR(r.normalizedRegret, 1.0, 1e-12);
    EXPECT_EQ(r.normalizedError, 0.0);
  }
}

TEST(Curves, LogGridHitsDecades) {
  const auto g = logGrid(10, 100000, 40);
  EXPECT_EQ(g.front(), 10);
  EXPECT_EQ(g.back(), 100000);
  EXPECT_NE(std::find(g.begin(), g.end(), 1000), g.end());
  EXPECT_NE(std::find(g.begin(), g.end(), 10000), g.end());
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(Trend, FlatPassesRisingFails) {
  const auto g = logGrid(10, 100000, 10);
  std::vector<double> flat(g.size(), 1.0), rising;
  for (Index n : g) rising.push_back(std::sqrt(double(n)));
  EXPECT_TRUE(noUpwardTrend(g, flat, 1000, 10000, 10000, 100000).passed);
  EXPECT_FALSE(noUpwardTrend(g, rising, 1000, 10000, 10000, 100000, 3.0).passed);
}

TEST(Fluctuation, ScalarRunningMeanApproachesK) {
  const Matrix one = Matrix::Identity(1, 1);
  const DynamicsParameter theta(0.5 * one, one);
  const CostSpec cost{one, one};
  auto pol = optimalPolicy(theta, cost);
  const Index n = 100000;
  const auto noise = drawNoise(NoiseModel{NoiseKind::Gaussian, one, 77}, n);
  const Trajectory t = simulate(theta, cost, *pol, noise);
  double total = 0.0;
  for (double c : t.costs) total += c;
  EXPECT_NEAR(total / double(n), 1.1327822, 0.03 * 1.1327822);
  const auto f = optimalCostFluctuation(t, theta, cost, one);
  EXPECT_TRUE(std::isfinite(f.back()));
  EXPECT_LT(std::abs(f.back()), 1.0);
}

TEST(Sandwich, RegretOverChiPlusRhoIsBoundedForRce) {
  const Coupled c = runRce(5000, 6);
  const RegretLedger l = computeRegret(c.traj, c.opt, presetDynamics("reference"), presetCost("reference"));
  const SandwichReport s = regretSandwich(l, 1000, 5000);
  EXPECT_GT(s.count, 0);
  EXPECT_GT(s.low, 0.0);
  EXPECT_LT(s.high, 100.0);
}

TEST(StateGrowth, EnvelopeIsFinite) {
  const Coupled c = runRce(5000, 8);
  EXPECT_LT(stateGrowthEnvelope(c.traj, 0.5), 50.0);
}

#include <cmath>
#include <type_traits>

#include <gtest/gtest.h>

#include "alqr/config.hpp"
#include "alqr/geometry.hpp"
#include "alqr/policies.hpp"
#include "alqr/system.hpp"

using namespace alqr;

// The adaptive policies choose u(t) from the observed history alone.
static_assert(std::is_same_v<decltype(&Policy::act), Action (Policy::*)(const History&)>);
static_assert(std::is_abstract_v<EpisodicPolicy>);

namespace {

struct Rig {
  DynamicsParameter theta0 = presetDynamics("reference");
  CostSpec cost = presetCost("reference");
  DynamicsParameter init = defaultInitialEstimate(theta0, cost, 17);
  std::vector<Vector> noise =
      drawNoise(NoiseModel{NoiseKind::Gaussian, Matrix::Identity(3, 3), 23}, 3000);
};

}  // namespace

TEST(InitialEstimate, StabilizesTheTrueSystem) {
  Rig s;
  const Matrix l = solveRiccati(s.init, s.cost).l;
  EXPECT_LT(spectralRadius(s.theta0.a + s.theta0.b * l).radius, 1.0);
  EXPECT_GT((s.init.stacked() - s.theta0.stacked()).norm(), 0.0);
}

TEST(Rce, PerturbationScale) {
  EXPECT_NEAR(rcePerturbationScale(1), rcePerturbationScale(2), 0.0);
  const double n = 1e4;
  EXPECT_NEAR(rcePerturbationScale(10000), std::pow(n, -0.25) * std::pow(std::log(n), 0.25), 1e-15);
}

TEST(Rce, UpdatesOnlyAtBoundariesAndIsDeterministic) {
  Rig s;
  auto a = rcePolicy(EpisodeSchedule(1.2), 0.1, s.init, s.cost, 5);
  auto b = rcePolicy(EpisodeSchedule(1.2), 0.1, s.init, s.cost, 5);
  const Trajectory ta = simulate(s.theta0, s.cost, *a, s.noise);
  const Trajectory tb = simulate(s.theta0, s.cost, *b, s.noise);
  ASSERT_EQ(ta.inputs.size(), tb.inputs.size());
  for (std::size_t i = 0; i < ta.inputs.size(); ++i) EXPECT_EQ(ta.inputs[i], tb.inputs[i]);
  for (const auto& u : a->updates()) EXPECT_TRUE(a->schedule().isBoundary(u.n));
  for (std::size_t t = 1; t < ta.gains.size(); ++t) {
    if (!a->schedule().isBoundary(static_cast<std::int64_t>(t))) EXPECT_EQ(ta.gains[t], ta.gains[t - 1]);
  }
}

TEST(Rce, PerturbationShrinksWithTheScale) {
  Rig s;
  auto pol = rcePolicy(EpisodeSchedule(1.2), 0.1, s.init, s.cost, 6);
  simulate(s.theta0, s.cost, *pol, s.noise);
  const auto& u = pol->updates().back();
  ASSERT_TRUE(u.accepted);
  // entries are N(0, (0.1 scale)^2): the Frobenius norm over 18 entries stays within a few sigma
  EXPECT_LT(u.perturbation.norm(), 0.1 * rcePerturbationScale(u.n) * 8.0);
  EXPECT_GT(u.perturbation.norm(), 0.0);
}

TEST(Rce, ClosedLoopIsIdentifiedBeforeTheFullParameter) {
  Rig s;
  auto pol = rcePolicy(EpisodeSchedule(1.2), 0.1, s.init, s.cost, 7);
  const Trajectory t = simulate(s.theta0, s.cost, *pol, s.noise);
  const Matrix err = pol->estimate().stacked() - s.theta0.stacked();
  Matrix lt(6, 3);
  lt << Matrix::Identity(3, 3), t.gains.back();
  EXPECT_LT(operatorNorm(err * lt), 0.2);
  EXPECT_LT(operatorNorm(err * lt), operatorNorm(err));
}

TEST(Ts, PosteriorSamplesHaveTheRequestedCovariance) {
  Matrix precision(2, 2);
  precision << 4.0, 1.0, 1.0, 2.0;
  Matrix mean(3, 2);
  mean << 1, 2, 3, 4, 5, 6;
  Rng rng(3);
  const int draws = 40000;
  Matrix cov = Matrix::Zero(2, 2);
  Matrix avg = Matrix::Zero(3, 2);
  for (int i = 0; i < draws; ++i) {
    const Matrix s = samplePosterior(mean, precision, rng);
    avg += s;
    const Vector row = (s - mean).row(1).transpose();
    cov += row * row.transpose();
  }
  avg /= draws;
  cov /= draws;
  EXPECT_LE((avg - mean).norm(), 0.02);
  EXPECT_LE((cov - precision.inverse()).norm(), 0.01);
}

TEST(Ts, PosteriorPrecisionIsPriorPlusGram) {
  Rig s;
  auto pol = tsPolicy(EpisodeSchedule(1.2), Matrix::Identity(6, 6), s.init, s.cost, 8);
  simulate(s.theta0, s.cost, *pol, s.noise);
  // the last update happened at the last boundary before the horizon, on data up to it
  EXPECT_GT(pol->lastPrecision().trace(), 6.0);
  EXPECT_TRUE(isSymmetricPositiveDefinite(pol->lastPrecision()));
}

TEST(Gce, EstimatesStayInTheSideSet) {
  const DynamicsParameter theta0 = presetDynamics("sparse");
  const CostSpec cost = presetCost("sparse");
  const SideInformation side = SideInformation::supportOf(theta0.stacked());
  const auto noise = drawNoise(NoiseModel{NoiseKind::Gaussian, Matrix::Identity(3, 3), 4}, 2000);
  auto pol = gcePolicy(EpisodeSchedule(1.2), side, GcePerturbation::none(),
                       defaultInitialEstimate(theta0, cost, 2), cost);
  simulate(theta0, cost, *pol, noise);
  for (const auto& u : pol->updates()) {
    if (u.accepted) EXPECT_TRUE(side.contains(u.center + u.perturbation, 1e-12));
  }
  EXPECT_LT(operatorNorm(pol->estimate().stacked() - theta0.stacked()), 0.25);
}

TEST(Gce, PerturbationRespectsTheEnvelope) {
  const GcePerturbation rule = GcePerturbation::randomDirection(0.5, 3, 6);
  Rng rng(1);
  for (std::int64_t n : {1, 10, 100, 10000}) {
    EXPECT_LE(operatorNorm(rule.rule(n, rng)), 0.5 / std::sqrt(static_cast<double>(n)) + 1e-15);
  }
}

TEST(Ce, KeepsStabilizingOnTheReferenceSystem) {
  Rig s;
  auto pol = cePolicy(EpisodeSchedule(1.2), s.init, s.cost);
  const Trajectory t = simulate(s.theta0, s.cost, *pol, s.noise);
  EXPECT_FALSE(t.diverged);
  EXPECT_EQ(t.horizon(), 3000);
}

#include "alqr/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "alqr/errors.hpp"
#include "alqr/geometry.hpp"
#include "alqr/harness.hpp"
#include "alqr/policies.hpp"
#include "alqr/regret.hpp"

namespace alqr {

namespace {

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

CheckResult timed(const std::string& name, const std::function<void(CheckResult&)>& body) {
  CheckResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

Matrix withRank(Index rows, Index cols, Index rk, Rng& rng) {
  const Matrix g = standardGaussian(rows, cols, rng);
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector s = svd.singularValues();
  for (Index i = rk; i < s.size(); ++i) s(i) = 0.0;
  const Index k = s.size();
  return svd.matrixU().leftCols(k) * s.asDiagonal() * svd.matrixV().leftCols(k).transpose();
}

Matrix randomSpd(Index n, Rng& rng) {
  const Matrix g = standardGaussian(n, n, rng);
  return g * g.transpose() / static_cast<double>(n) + 0.1 * Matrix::Identity(n, n);
}

ExperimentConfig baseConfig(const std::string& system, PolicyKind kind, Index horizon,
                            int replicates, int threads) {
  ExperimentConfig c;
  c.systemName = system;
  c.theta0 = presetDynamics(system);
  c.cost = presetCost(system);
  c.noiseCovariance = Matrix::Identity(c.theta0.stateDim(), c.theta0.stateDim());
  c.policy.kind = kind;
  c.horizon = horizon;
  c.replicates = replicates;
  c.threads = threads;
  c.decompositionPerDecade = 1;
  return c;
}

/// Mid and last decades below the horizon.
struct Decades {
  Index midLo, midHi, lastLo, lastHi;
};

Decades decadesBelow(Index horizon) {
  return {horizon / 100, horizon / 10, horizon / 10, horizon};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

bool VerifyReport::passed() const {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

std::vector<RankInstance> rankFamily(int trialsPerRank, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RankInstance> out;
  const Index p = 3;
  for (Index rankB : {Index{3}, Index{2}}) {
    for (Index rankA = 0; rankA <= p; ++rankA) {
      for (int t = 0; t < trialsPerRank; ++t) {
        Matrix a = withRank(p, p, rankA, rng);
        if (rankA > 0) a *= (rankB == p ? 1.3 : 0.9) / operatorNorm(a);
        Matrix b = withRank(p, p, rankB, rng);
        b /= operatorNorm(b);
        out.push_back({DynamicsParameter(a, b),
                       CostSpec{Matrix::Identity(p, p), Matrix::Identity(p, p)}, rankA, rankB});
      }
    }
  }
  return out;
}

std::vector<std::pair<DynamicsParameter, CostSpec>> randomInstances(int count,
                                                                    std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> dim(1, 4);
  std::vector<std::pair<DynamicsParameter, CostSpec>> out;
  while (static_cast<int>(out.size()) < count) {
    const Index p = dim(rng);
    const Index r = dim(rng);
    Matrix a = standardGaussian(p, p, rng);
    a *= 1.5 / std::max(1e-3, operatorNorm(a));
    const Matrix b = standardGaussian(p, r, rng);
    DynamicsParameter theta(a, b);
    CostSpec cost{randomSpd(p, rng), randomSpd(r, rng)};
    try {
      solveRiccati(theta, cost);
    } catch (const Error&) {
      continue;
    }
    out.emplace_back(std::move(theta), std::move(cost));
  }
  return out;
}

CheckResult checkRiccati(int randomCount) {
  return timed("riccati", [&](CheckResult& r) {
    auto instances = randomInstances(randomCount, 101);
    instances.emplace(instances.begin(), presetDynamics("reference"), presetCost("reference"));
    double worstResidual = 0.0, worstLyap = 0.0, worstRho = 0.0;
    bool ok = true;
    for (const auto& [theta, cost] : instances) {
      const RiccatiSolution sol = solveRiccati(theta, cost);
      const double kn = operatorNorm(sol.k);
      const double res = riccatiResidual(theta, cost, sol.k) / (1.0 + kn);
      const Matrix d = theta.a + theta.b * sol.l;
      const double rho = spectralRadius(d).radius;
      const Matrix lyap = solveLyapunov(d, cost.q + sol.l.transpose() * cost.r * sol.l);
      const double agree = operatorNorm(lyap - sol.k) / (1.0 + kn);
      worstResidual = std::max(worstResidual, res);
      worstLyap = std::max(worstLyap, agree);
      worstRho = std::max(worstRho, rho);
      ok = ok && res <= 1e-9 && rho < 1.0 && agree <= 1e-8;
    }
    r.passed = ok;
    r.detail = fmt("%zu instances; max residual/(1+|K|) %.2e, max Lyapunov gap %.2e, max rho %.4f",
                   instances.size(), worstResidual, worstLyap, worstRho);
  });
}

CheckResult checkScalarOracle() {
  return timed("scalar oracle", [](CheckResult& r) {
    Matrix one = Matrix::Identity(1, 1);
    const DynamicsParameter theta(0.5 * one, one);
    const RiccatiSolution sol = solveRiccati(theta, CostSpec{one, one});
    const double k = (0.25 + std::sqrt(4.0625)) / 2.0;
    const double l = -0.5 * k / (k + 1.0);
    const double dk = std::abs(sol.k(0, 0) - k);
    const double dl = std::abs(sol.l(0, 0) - l);
    r.passed = dk <= 1e-10 && dl <= 1e-10;
    r.detail = fmt("k = %.12f (|dk| %.1e), l = %.12f (|dl| %.1e)", sol.k(0, 0), dk, sol.l(0, 0), dl);
  });
}

CheckResult checkDecomposition(int seeds, const std::vector<Index>& horizons, bool negateT) {
  return timed("decomposition identity", [&](CheckResult& r) {
    const DynamicsParameter theta0 = presetDynamics("reference");
    const CostSpec cost = presetCost("reference");
    const Index nMax = *std::max_element(horizons.begin(), horizons.end());
    const EpisodeSchedule schedule(1.2);
    const Matrix identity = Matrix::Identity(3, 3);
    double worst = 0.0;
    int evaluated = 0;
    bool ok = true;
    for (int s = 0; s < seeds; ++s) {
      const ReplicateSeeds rs = replicateSeeds(7001, s);
      const auto noise = drawNoise(NoiseModel{NoiseKind::Gaussian, identity, rs.noise}, nMax);
      const DynamicsParameter init = defaultInitialEstimate(theta0, cost, rs.initial);
      for (PolicyKind kind : {PolicyKind::Optimal, PolicyKind::Ce, PolicyKind::Rce, PolicyKind::Ts}) {
        std::unique_ptr<Policy> pol;
        switch (kind) {
          case PolicyKind::Optimal: pol = optimalPolicy(theta0, cost); break;
          case PolicyKind::Ce: pol = cePolicy(schedule, init, cost); break;
          case PolicyKind::Rce: pol = rcePolicy(schedule, 0.1, init, cost, rs.policy); break;
          default: pol = tsPolicy(schedule, Matrix::Identity(6, 6), init, cost, rs.policy); break;
        }
        auto opt = optimalPolicy(theta0, cost);
        auto [traj, optTraj] =
            simulateCoupled(theta0, cost, *pol, *opt, noise, Vector::Zero(3));
        if (traj.diverged) {
          ok = false;
          r.detail += fmt("%s seed %d diverged at t = %ld; ", std::string(pol->name()).c_str(), s,
                          static_cast<long>(traj.horizon()));
          continue;
        }
        const RegretLedger ledger = computeRegret(traj, optTraj, theta0, cost);
        for (Index n : horizons) {
          DecomposeOptions opts;
          opts.negateT = negateT;
          const DecompositionTerms terms = decompose(traj, theta0, cost, n, opts);
          const double rn = ledger.regret[static_cast<std::size_t>(n)];
          worst = std::max(worst, std::abs(rn - terms.total()) / (1.0 + std::abs(rn)));
          ok = ok && decompositionHolds(rn, terms);
          ++evaluated;
        }
      }
    }
    r.passed = ok;
    r.detail += fmt("%d (seed, policy, n) cases; max |R - (Z+S+T)|/(1+|R|) = %.2e", evaluated, worst);
  });
}

CheckResult checkP0Dimensions(int trialsPerRank) {
  return timed("P0 dimension", [&](CheckResult& r) {
    bool ok = true;
    double worstFeedback = 0.0, worstLoop = 0.0, worstK = 0.0;
    int members = 0;
    Rng rng(404);
    std::string counts;
    for (const RankInstance& inst : rankFamily(trialsPerRank, 2024)) {
      const AffineSubspace p0 = constructP0(inst.theta0, inst.cost);
      const Index expected = (3 - inst.rankA) * 3;
      if (p0.dimension() != expected) {
        ok = false;
        counts += fmt("rank A %ld: got %ld expected %ld; ", static_cast<long>(inst.rankA),
                      static_cast<long>(p0.dimension()), static_cast<long>(expected));
      }
      const Index p = inst.theta0.stateDim();
      for (int s = 0; s < 4 && p0.dimension() > 0; ++s) {
        const Vector coeff = 0.5 * standardGaussian(p0.dimension(), 1, rng);
        const auto theta = DynamicsParameter::fromStacked(p0.point(coeff), p);
        const MembershipReport m = verifyP0Membership(theta, inst.theta0, inst.cost);
        ok = ok && m.sameFeedback && m.sameClosedLoop && m.riccatiGap <= 1e-7;
        worstFeedback = std::max(worstFeedback, m.feedbackGap);
        worstLoop = std::max(worstLoop, m.closedLoopGap);
        worstK = std::max(worstK, m.riccatiGap);
        ++members;
      }
    }
    r.passed = ok;
    r.detail = counts + fmt("%d members sampled; max gaps: feedback %.1e, closed loop %.1e, K %.1e",
                            members, worstFeedback, worstLoop, worstK);
  });
}

CheckResult checkTangentDimensions(int trialsPerRank) {
  return timed("tangent dimension", [&](CheckResult& r) {
    auto family = rankFamily(trialsPerRank, 2024);
    family.insert(family.begin(), RankInstance{presetDynamics("reference"), presetCost("reference"), 3, 3});
    bool ok = true;
    std::string mismatches;
    Index referenceDim = -1;
    for (const RankInstance& inst : family) {
      const TangentReport t = tangentDimension(inst.theta0, inst.cost, 2 * 18);
      const Index expected = 9 + (3 - inst.rankA) * (3 - inst.rankB);
      if (referenceDim < 0) referenceDim = t.dimension;
      if (t.dimension != expected) {
        ok = false;
        mismatches += fmt("ranks (%ld,%ld): got %ld expected %ld; ", static_cast<long>(inst.rankA),
                          static_cast<long>(inst.rankB), static_cast<long>(t.dimension),
                          static_cast<long>(expected));
      }
    }
    r.passed = ok;
    r.detail = mismatches + fmt("%zu instances; reference system dimension %ld", family.size(),
                                static_cast<long>(referenceDim));
  });
}

CheckResult checkUnfalsifiable(int samples) {
  return timed("unfalsifiable set", [&](CheckResult& r) {
    const DynamicsParameter theta0 = presetDynamics("reference");
    const CostSpec cost = presetCost("reference");
    Rng rng(1234);
    const double scales[] = {1.0, 0.1, 0.01, 0.001};
    int tested = 0, accepted = 0, skipped = 0;
    while (tested < samples) {
      const double s = scales[(tested + skipped) % 4];
      const Matrix g = s * standardGaussian(3, 6, rng);
      const auto theta = DynamicsParameter::fromStacked(theta0.stacked() + g, 3);
      try {
        if (unfalsifiableTest(theta, theta0, cost)) ++accepted;
        ++tested;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotStabilizable) throw;
        ++skipped;
      }
    }
    const bool selfTrue = unfalsifiableTest(theta0, theta0, cost);
    r.passed = accepted == 0 && selfTrue;
    r.detail = fmt("%d perturbations tested (%d non-stabilizable skipped), %d unfalsifiable; theta0 itself %s",
                   tested, skipped, accepted, selfTrue ? "unfalsifiable" : "falsifiable");
  });
}

CheckResult checkLipschitz(int samples) {
  return timed("local Lipschitz", [&](CheckResult& r) {
    const DynamicsParameter theta0 = presetDynamics("reference");
    const CostSpec cost = presetCost("reference");
    const LipschitzReport wide = lipschitzDiagnostic(theta0, cost, 0.05, samples);
    const LipschitzReport narrow = lipschitzDiagnostic(theta0, cost, 0.025, samples);
    const bool finite = std::isfinite(wide.maxRatio) && std::isfinite(narrow.maxRatio);
    const double spread = wide.maxRatio / std::max(narrow.maxRatio, 1e-300);
    r.passed = finite && spread < 2.0 && spread > 0.5;
    r.detail = fmt("max ratio %.4f at radius 0.05, %.4f at radius 0.025", wide.maxRatio,
                   narrow.maxRatio);
  });
}

CheckResult checkIdentifiability(int samples) {
  return timed("identifiability", [&](CheckResult& r) {
    const auto family = rankFamily(1, 77);
    const RankInstance* deficient = nullptr;
    for (const auto& inst : family) {
      if (inst.rankA == 2 && inst.rankB == 3) deficient = &inst;
    }
    const DynamicsParameter& theta0 = deficient->theta0;
    const CostSpec& cost = deficient->cost;
    const auto single = identifiabilityCheck(SideInformation::singleton(theta0.stacked()), theta0,
                                             cost, 50);
    const auto full = identifiabilityCheck(SideInformation::unconstrained(3, 6), theta0, cost, 200);
    const SubspaceConstraints sub = identifiableSubspace(theta0, cost);
    const auto bounded = identifiabilityCheck(sub.side, theta0, cost, samples);
    const DynamicsParameter sparse = presetDynamics("sparse");
    const auto support = identifiabilityCheck(SideInformation::supportOf(sparse.stacked()), sparse,
                                              presetCost("sparse"), samples);
    r.passed = single.holds && !full.holds && bounded.holds && support.holds;
    r.detail = fmt("singleton %s; full support with rank A0 = 2 %s; identifiable subspace "
                   "(%zu constraints) l0 = %.3f%s; sparse support l0 = %.3f",
                   single.holds ? "holds" : "fails", full.holds ? "holds" : "violated",
                   sub.constraints.size(), bounded.estimatedConstant,
                   bounded.offTruthKernelViolation ? " (kernel directions away from theta0)" : "",
                   support.estimatedConstant);
  });
}

CheckResult checkRegretBoundedness(PolicyKind kind, Index horizon, int replicates, int threads) {
  return timed(toString(kind) + " normalized curves", [&](CheckResult& r) {
    const ExperimentConfig c = baseConfig("reference", kind, horizon, replicates, threads);
    const RunRecord rec = runExperiment(c, RunOptions{false, threads});
    const Decades d = decadesBelow(horizon);
    const TrendCheck reg = noUpwardTrend(rec.grid, summaryColumn(rec, &SummaryRow::normRegretMedian),
                                         d.midLo, d.midHi, d.lastLo, d.lastHi);
    const TrendCheck err = noUpwardTrend(rec.grid, summaryColumn(rec, &SummaryRow::normErrorMedian),
                                         d.midLo, d.midHi, d.lastLo, d.lastHi);
    r.passed = reg.passed && err.passed && rec.succeeded() == replicates;
    r.detail = fmt("%d/%d replicates; regret/(sqrt(n) log n) last-decade max %.3f vs middle %.3f; "
                   "error n^(1/4)/log^(1/2) n last %.3f vs middle %.3f",
                   rec.succeeded(), replicates, reg.lastMax, reg.middleMax, err.lastMax, err.middleMax);
  });
}

CheckResult checkGceRates(Index horizon, int replicates, int threads) {
  return timed("gce rates", [&](CheckResult& r) {
    ExperimentConfig g = baseConfig("sparse", PolicyKind::Gce, horizon, replicates, threads);
    g.policy.side.source = SideSource::TrueSupport;
    const RunRecord gce = runExperiment(g, RunOptions{false, threads});
    const ExperimentConfig rc = baseConfig("sparse", PolicyKind::Rce, horizon, replicates, threads);
    const RunRecord rce = runExperiment(rc, RunOptions{false, threads});
    const Decades d = decadesBelow(horizon);
    const TrendCheck reg = noUpwardTrend(gce.grid, summaryColumn(gce, &SummaryRow::logRegretMedian),
                                         d.midLo, d.midHi, d.lastLo, d.lastHi);
    const TrendCheck err = noUpwardTrend(gce.grid, summaryColumn(gce, &SummaryRow::p0ErrorMedian),
                                         d.midLo, d.midHi, d.lastLo, d.lastHi);
    const double gceFinal = gce.summary.back().regretMedian;
    const double rceFinal = rce.summary.back().regretMedian;
    const double ratio = rceFinal / std::max(gceFinal, 1e-300);
    const double required = horizon >= 100000 ? 10.0 : 1.0;
    r.passed = reg.passed && err.passed && ratio >= required && gce.succeeded() == replicates &&
               rce.succeeded() == replicates;
    r.detail = fmt("R/log^2 n last %.3f vs middle %.3f; n d(P0)^2/log n last %.3f vs middle %.3f; "
                   "median regret at n = %ld: rce %.1f, gce %.1f, ratio %.2f (need >= %g)",
                   reg.lastMax, reg.middleMax, err.lastMax, err.middleMax,
                   static_cast<long>(horizon), rceFinal, gceFinal, ratio, required);
  });
}

CheckResult checkOptimalFluctuation(Index horizon, int replicates, int threads) {
  return timed("optimal cost fluctuation", [&](CheckResult& r) {
    const ExperimentConfig c = baseConfig("reference", PolicyKind::Optimal, horizon, replicates, threads);
    const RunRecord rec = runExperiment(c, RunOptions{false, threads});
    const Decades d = decadesBelow(horizon);
    const std::vector<double> med = summaryColumn(rec, &SummaryRow::fluctuationMedian);
    const TrendCheck t = noUpwardTrend(rec.grid, med, d.midLo, d.midHi, d.lastLo, d.lastHi, 2.0);
    double worst = 0.0;
    for (const auto& rep : rec.replicates) {
      for (std::size_t g = 0; g < rec.grid.size(); ++g) {
        if (rec.grid[g] >= d.midLo) worst = std::max(worst, std::abs(rep.fluctuation[g]));
      }
    }
    bool zeroRegret = true;
    for (const auto& s : rec.summary) zeroRegret = zeroRegret && s.regretMax == 0.0;
    r.passed = t.passed && std::isfinite(worst) && zeroRegret;
    r.detail = fmt("median |f_n| last-decade max %.4f vs middle %.4f; max |f_n| over all seeds %.4f",
                   t.lastMax, t.middleMax, worst);
  });
}

CheckResult checkDeterminism(Index horizon) {
  return timed("determinism", [&](CheckResult& r) {
    const auto root = std::filesystem::temp_directory_path() /
                      ("alqr-determinism-" + std::to_string(static_cast<long>(horizon)));
    std::filesystem::remove_all(root);
    bool ok = true;
    int compared = 0;
    for (PolicyKind kind : {PolicyKind::Rce, PolicyKind::Ts, PolicyKind::Gce}) {
      ExperimentConfig c = baseConfig(kind == PolicyKind::Gce ? "sparse" : "reference", kind, horizon, 3, 1);
      const auto a = root / (toString(kind) + "-a");
      const auto b = root / (toString(kind) + "-b");
      c.output = a;
      runExperiment(c, RunOptions{true, 1});
      c.output = b;
      runExperiment(c, RunOptions{true, 3});
      for (const char* f : {"regret.csv", "estimation.csv", "decomposition.csv", "summary.csv",
                            "replicates.csv"}) {
        ok = ok && slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
        ++compared;
      }
    }
    std::filesystem::remove_all(root);
    r.passed = ok;
    r.detail = fmt("%d CSV pairs compared (1 vs 3 worker threads)", compared);
  });
}

VerifyReport verifySuite(const VerifyOptions& o) {
  VerifyReport rep;
  const bool full = o.level == VerifyLevel::Full;
  const Index mcHorizon = full ? 100000 : 10000;
  const int mcReplicates = full ? 10 : 4;
  rep.checks.push_back(checkRiccati(100));
  rep.checks.push_back(checkScalarOracle());
  rep.checks.push_back(checkDecomposition(5, {100, 1000, 10000}, o.negateT));
  rep.checks.push_back(checkP0Dimensions(3));
  rep.checks.push_back(checkTangentDimensions(3));
  rep.checks.push_back(checkUnfalsifiable(1000));
  rep.checks.push_back(checkLipschitz(1000));
  rep.checks.push_back(checkIdentifiability(1000));
  rep.checks.push_back(checkRegretBoundedness(PolicyKind::Rce, mcHorizon, mcReplicates, o.threads));
  rep.checks.push_back(checkRegretBoundedness(PolicyKind::Ts, mcHorizon, mcReplicates, o.threads));
  rep.checks.push_back(checkGceRates(mcHorizon, mcReplicates, o.threads));
  rep.checks.push_back(checkOptimalFluctuation(mcHorizon, full ? 10 : 4, o.threads));
  rep.checks.push_back(checkDeterminism(full ? 5000 : 1000));
  return rep;
}

}  // namespace alqr

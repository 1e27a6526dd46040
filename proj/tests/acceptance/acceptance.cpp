// Acceptance run: one line per criterion, nonzero exit if any fails.

#include <cstdio>
#include <functional>
#include <vector>

#include "alqr/verify.hpp"

using namespace alqr;

namespace {

struct Criterion {
  int id;
  const char* title;
  double budgetSeconds;  // 0: no budget
  std::function<CheckResult()> run;
};

}  // namespace

int main() {
  const Index horizon = 100000;
  const int replicates = 10;
  const std::vector<Criterion> criteria = {
      {1, "Riccati correctness", 5, [] { return checkRiccati(100); }},
      {2, "scalar oracle", 0, [] { return checkScalarOracle(); }},
      {3, "exact decomposition identity", 120,
       [] { return checkDecomposition(5, {100, 1000, 10000}, false); }},
      {4, "P0 dimension and membership", 30, [] { return checkP0Dimensions(3); }},
      {5, "tangent space dimension", 30, [] { return checkTangentDimensions(3); }},
      {6, "RCE normalized curves", 600,
       [&] { return checkRegretBoundedness(PolicyKind::Rce, horizon, replicates, 0); }},
      {7, "TS normalized curves", 600,
       [&] { return checkRegretBoundedness(PolicyKind::Ts, horizon, replicates, 0); }},
      {8, "GCE logarithmic rates", 600, [&] { return checkGceRates(horizon, replicates, 0); }},
      {9, "optimal cost fluctuation", 0,
       [&] { return checkOptimalFluctuation(horizon, replicates, 0); }},
      {10, "unfalsifiable set is null", 0, [] { return checkUnfalsifiable(1000); }},
      {11, "determinism", 0, [] { return checkDeterminism(5000); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const CheckResult r = c.run();
    const bool inBudget = c.budgetSeconds <= 0 || r.seconds < c.budgetSeconds;
    const bool ok = r.passed && inBudget;
    if (!ok) ++failures;
    std::printf("criterion %2d %-30s %s  %7.2fs%s  %s\n", c.id, c.title, ok ? "PASS" : "FAIL",
                r.seconds, inBudget ? "" : " over budget", r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}

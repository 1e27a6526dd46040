#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alqr/config.hpp"
#include "alqr/model.hpp"

namespace alqr {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  ///< measured quantities, for the report line
  double seconds = 0.0;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

enum class VerifyLevel { Fast, Full };

struct VerifyOptions {
  VerifyLevel level = VerifyLevel::Fast;
  /// Deliberate fault: the decomposition reports -T_n.
  bool negateT = false;
  int threads = 0;
};

/// Every module's invariant battery. Fast shortens the Monte-Carlo horizons
/// to 10^4; full runs them at 10^5.
VerifyReport verifySuite(const VerifyOptions& options);

/// A 3x3 instance with prescribed ranks of A0 and B0.
struct RankInstance {
  DynamicsParameter theta0;
  CostSpec cost;
  Index rankA = 0;
  Index rankB = 0;
};

/// trialsPerRank instances for each rank(A0) in {0, ..., 3} and rank(B0) in
/// {3, 2}; unit costs. Rank-deficient B0 comes with a contractive A0 so the
/// pair stays stabilizable.
std::vector<RankInstance> rankFamily(int trialsPerRank, std::uint64_t seed);

/// Random stabilizable (A, B) with 1 <= p, r <= 4 and random SPD costs.
std::vector<std::pair<DynamicsParameter, CostSpec>> randomInstances(int count,
                                                                    std::uint64_t seed);

CheckResult checkRiccati(int randomCount);
CheckResult checkScalarOracle();
CheckResult checkDecomposition(int seeds, const std::vector<Index>& horizons, bool negateT);
CheckResult checkP0Dimensions(int trialsPerRank);
CheckResult checkTangentDimensions(int trialsPerRank);
CheckResult checkUnfalsifiable(int samples);
CheckResult checkLipschitz(int samples);
CheckResult checkIdentifiability(int samples);

/// Median-across-replicates normalized regret and error of an adaptive policy
/// on the reference system show no upward trend over the last two decades below
/// the horizon.
CheckResult checkRegretBoundedness(PolicyKind kind, Index horizon, int replicates, int threads);

/// GCE with exact support on the sparse preset: R/log^2 n and
/// n inf_{P0} ||theta_hat - theta||^2 / log n show no upward trend, and RCE
/// regret at the horizon is at least 10 times the GCE regret (horizons of
/// 10^5 and up; shorter horizons only require GCE below RCE).
CheckResult checkGceRates(Index horizon, int replicates, int threads);

/// Optimal policy, reference system: the median |f_n| does not double between
/// the two last decades.
CheckResult checkOptimalFluctuation(Index horizon, int replicates, int threads);

/// The same config written twice, with different thread counts, gives
/// byte-identical CSVs.
CheckResult checkDeterminism(Index horizon);

}  // namespace alqr

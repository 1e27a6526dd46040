#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "alqr/linalg.hpp"
#include "alqr/model.hpp"
#include "alqr/system.hpp"

namespace alqr {

/// Pathwise regret of a linear policy against the optimal regulator on the
/// same noise realization. Series are indexed by n = 0..N.
struct RegretLedger {
  Index horizon = 0;
  std::vector<double> regret;  ///< R(n) = sum_{t<n} c_t(pi) - c_t(pi*)
  std::vector<double> chi;     ///< sum_{t<n} ||(L(theta0) - L_t) x(t)||^2
  std::vector<double> rho;     ///< xbar(n)' K xbar(n) - x(n)' K x(n)
  std::vector<Matrix> gains;
};

/// Throws MismatchedTrajectories if horizons or noise realizations differ.
RegretLedger computeRegret(const Trajectory& traj, const Trajectory& optTraj,
                           const DynamicsParameter& theta0, const CostSpec& cost);

/// The three terms of the exact identity R(n) = Z_n + S_n + T_n.
struct DecompositionTerms {
  Index n = 0;
  double zN = 0.0;
  double sN = 0.0;
  double tN = 0.0;
  /// K_j = D'^{n-j} K(theta0) D^{n-j}, j = 0..n (filled on request).
  std::vector<Matrix> kLadder;

  double total() const { return zN + sN + tN; }
};

struct DecomposeOptions {
  bool keepLadder = false;
  /// Deliberate fault for sensitivity checks: report -T_n.
  bool negateT = false;
};

/// Evaluates the decomposition at horizon n (<= traj.horizon()) using the
/// trajectory's recorded gains and noises. O(n) via the ladder recursion
/// K_j = D' K_{j+1} D and xi_{k+1} = D xi_k + 2 Delta_k x(k).
DecompositionTerms decompose(const Trajectory& traj, const DynamicsParameter& theta0,
                             const CostSpec& cost, Index n, const DecomposeOptions& options = {});

inline DecompositionTerms decompose(const Trajectory& traj, const DynamicsParameter& theta0,
                                    const CostSpec& cost) {
  return decompose(traj, theta0, cost, traj.horizon());
}

/// |R(n) - (Z + S + T)| <= 1e-6 (1 + |R(n)|).
bool decompositionHolds(double regret, const DecompositionTerms& terms, double relTol = 1e-6);

/// Normalized statistics at one horizon.
struct CurveRow {
  Index n = 0;
  double regret = 0.0;
  double error = 0.0;                ///< ||theta_hat_n - theta0||
  double normalizedRegret = 0.0;     ///< R / (n^{1/2} log n)
  double normalizedError = 0.0;      ///< error n^{1/4} / log^{1/2} n
  double logRegret = 0.0;            ///< R / log^2 n
  double normalizedSquaredError = 0.0;  ///< n error^2 / log n
};

/// Rows at each n in grid (n >= 2). errorSeries[n] is the error in force at
/// time n; an empty series leaves the error columns at zero.
std::vector<CurveRow> normalizedCurves(const RegretLedger& ledger,
                                       const std::vector<double>& errorSeries,
                                       const std::vector<Index>& grid);

/// Roughly `perDecade` log-spaced integers in [lo, hi], deduplicated.
std::vector<Index> logGrid(Index lo, Index hi, int perDecade = 40);

/// f_n = (sum_{t<n} c_t - n tr(K C)) / (n^{1/2} log n) for n = 2..N (index n).
std::vector<double> optimalCostFluctuation(const Trajectory& optTraj,
                                           const DynamicsParameter& theta0, const CostSpec& cost,
                                           const Matrix& noiseCov);

/// "No upward trend": max over [lastLo, lastHi] <= factor * max over [midLo, midHi]
/// for a curve sampled at the given grid.
struct TrendCheck {
  double middleMax = 0.0;
  double lastMax = 0.0;
  bool passed = false;
};
TrendCheck noUpwardTrend(const std::vector<Index>& grid, const std::vector<double>& values,
                         Index midLo, Index midHi, Index lastLo, Index lastHi,
                         double factor = 3.0);

/// min and max of R(n) / (chi_n + rho_n) over n in [lo, hi] where the
/// denominator is positive.
struct SandwichReport {
  double low = 0.0;
  double high = 0.0;
  Index count = 0;
};
SandwichReport regretSandwich(const RegretLedger& ledger, Index lo, Index hi);

/// max_{1 <= t <= n} ||x(t)|| / t^beta.
double stateGrowthEnvelope(const Trajectory& traj, double beta);

/// CSV with columns n, regret, chi, rho.
void writeLedgerCsv(std::ostream& out, const RegretLedger& ledger, const std::vector<Index>& grid);

}  // namespace alqr

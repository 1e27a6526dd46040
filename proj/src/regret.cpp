#include "alqr/regret.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "alqr/errors.hpp"

namespace alqr {

namespace {

std::size_t idx(Index i) { return static_cast<std::size_t>(i); }

}  // namespace

RegretLedger computeRegret(const Trajectory& traj, const Trajectory& optTraj,
                           const DynamicsParameter& theta0, const CostSpec& cost) {
  if (traj.horizon() != optTraj.horizon() || traj.noiseTag != optTraj.noiseTag) {
    throw Error(ErrorCode::MismatchedTrajectories,
                "regret needs two trajectories driven by the same noise realization");
  }
  if (!traj.hasGains()) {
    throw Error(ErrorCode::MissingGains, "regret ledger needs the per-step gain record");
  }
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Index n = traj.horizon();

  RegretLedger ledger;
  ledger.horizon = n;
  ledger.regret.assign(idx(n + 1), 0.0);
  ledger.chi.assign(idx(n + 1), 0.0);
  ledger.rho.assign(idx(n + 1), 0.0);
  ledger.gains = traj.gains;
  for (Index t = 0; t < n; ++t) {
    const Vector& x = traj.states[idx(t)];
    ledger.regret[idx(t + 1)] = ledger.regret[idx(t)] + traj.costs[idx(t)] - optTraj.costs[idx(t)];
    ledger.chi[idx(t + 1)] = ledger.chi[idx(t)] + ((sol.l - traj.gains[idx(t)]) * x).squaredNorm();
  }
  for (Index t = 0; t <= n; ++t) {
    const Vector& x = traj.states[idx(t)];
    const Vector& xbar = optTraj.states[idx(t)];
    ledger.rho[idx(t)] = xbar.dot(sol.k * xbar) - x.dot(sol.k * x);
  }
  return ledger;
}

DecompositionTerms decompose(const Trajectory& traj, const DynamicsParameter& theta0,
                             const CostSpec& cost, Index n, const DecomposeOptions& options) {
  if (!traj.hasGains()) {
    throw Error(ErrorCode::MissingGains, "decomposition needs the per-step gain record");
  }
  if (n < 0 || n > traj.horizon() || traj.noises.size() < idx(n)) {
    throw Error(ErrorCode::DimensionMismatch, "decomposition horizon exceeds the trajectory");
  }
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Matrix& k = sol.k;
  const Matrix d = theta0.a + theta0.b * sol.l;
  const Matrix dt = d.transpose();
  const Matrix m = theta0.b.transpose() * k * theta0.b + cost.r;

  // K_n = K(theta0), K_j = D' K_{j+1} D.
  std::vector<Matrix> ladder(idx(n + 1));
  ladder[idx(n)] = k;
  for (Index j = n - 1; j >= 0; --j) {
    ladder[idx(j)] = dt * ladder[idx(j + 1)] * d;
  }

  DecompositionTerms terms;
  terms.n = n;
  const Index p = theta0.stateDim();
  Vector xi = Vector::Zero(p);
  for (Index step = 0; step < n; ++step) {
    const Vector& x = traj.states[idx(step)];
    const Matrix& gain = traj.gains[idx(step)];
    const Vector gap = (gain - sol.l) * x;
    terms.tN += gap.dot(m * gap);

    // x' (D' K_{k+1} D - D_k' K_{k+1} D_k) x, with D' K_{k+1} D = K_k.
    const Vector dkx = theta0.a * x + theta0.b * (gain * x);
    terms.sN += x.dot(ladder[idx(step)] * x) - dkx.dot(ladder[idx(step + 1)] * dkx);

    // xi_{k+1} = D xi_k + 2 Delta_k x(k), Delta_k x(k) = B0 (L_k - L*) x(k).
    xi = d * xi + 2.0 * (theta0.b * gap);
    const Vector& w = traj.noises[idx(step)];  // w(step + 1)
    terms.zN += w.dot((k - ladder[idx(step + 1)]) * xi);
  }
  if (options.negateT) {
    terms.tN = -terms.tN;
  }
  if (options.keepLadder) {
    terms.kLadder = std::move(ladder);
  }
  return terms;
}

bool decompositionHolds(double regret, const DecompositionTerms& terms, double relTol) {
  return std::abs(regret - terms.total()) <= relTol * (1.0 + std::abs(regret));
}

std::vector<CurveRow> normalizedCurves(const RegretLedger& ledger,
                                       const std::vector<double>& errorSeries,
                                       const std::vector<Index>& grid) {
  std::vector<CurveRow> rows;
  rows.reserve(grid.size());
  for (Index n : grid) {
    if (n < 2 || n > ledger.horizon) continue;
    CurveRow row;
    row.n = n;
    const double nn = static_cast<double>(n);
    const double logn = std::log(nn);
    row.regret = ledger.regret[idx(n)];
    row.error = idx(n) < errorSeries.size() ? errorSeries[idx(n)] : 0.0;
    row.normalizedRegret = row.regret / (std::sqrt(nn) * logn);
    row.normalizedError = row.error * std::pow(nn, 0.25) / std::sqrt(logn);
    row.logRegret = row.regret / (logn * logn);
    row.normalizedSquaredError = nn * row.error * row.error / logn;
    rows.push_back(row);
  }
  return rows;
}

std::vector<Index> logGrid(Index lo, Index hi, int perDecade) {
  std::vector<Index> grid;
  if (lo < 1 || hi < lo) return grid;
  const double a = std::log10(static_cast<double>(lo));
  const double b = std::log10(static_cast<double>(hi));
  const int steps = std::max(1, static_cast<int>(std::ceil((b - a) * perDecade)));
  for (int i = 0; i <= steps; ++i) {
    const auto n = static_cast<Index>(std::llround(std::pow(10.0, a + (b - a) * i / steps)));
    const Index clamped = std::clamp(n, lo, hi);
    if (grid.empty() || grid.back() != clamped) grid.push_back(clamped);
  }
  return grid;
}

std::vector<double> optimalCostFluctuation(const Trajectory& optTraj,
                                           const DynamicsParameter& theta0, const CostSpec& cost,
                                           const Matrix& noiseCov) {
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const double jStar = (sol.k * noiseCov).trace();
  const Index n = optTraj.horizon();
  std::vector<double> series(idx(n + 1), 0.0);
  double total = 0.0;
  for (Index t = 1; t <= n; ++t) {
    total += optTraj.costs[idx(t - 1)];
    if (t >= 2) {
      const double nn = static_cast<double>(t);
      series[idx(t)] = (total - nn * jStar) / (std::sqrt(nn) * std::log(nn));
    }
  }
  return series;
}

TrendCheck noUpwardTrend(const std::vector<Index>& grid, const std::vector<double>& values,
                         Index midLo, Index midHi, Index lastLo, Index lastHi, double factor) {
  TrendCheck check;
  check.middleMax = -std::numeric_limits<double>::infinity();
  check.lastMax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size() && i < values.size(); ++i) {
    if (grid[i] >= midLo && grid[i] <= midHi) check.middleMax = std::max(check.middleMax, values[i]);
    if (grid[i] >= lastLo && grid[i] <= lastHi) check.lastMax = std::max(check.lastMax, values[i]);
  }
  check.passed = std::isfinite(check.middleMax) && std::isfinite(check.lastMax) &&
                 check.lastMax <= factor * check.middleMax;
  return check;
}

SandwichReport regretSandwich(const RegretLedger& ledger, Index lo, Index hi) {
  SandwichReport report;
  report.low = std::numeric_limits<double>::infinity();
  report.high = -std::numeric_limits<double>::infinity();
  for (Index n = std::max<Index>(lo, 1); n <= std::min(hi, ledger.horizon); ++n) {
    const double den = ledger.chi[idx(n)] + ledger.rho[idx(n)];
    if (den <= 0.0) continue;
    const double ratio = ledger.regret[idx(n)] / den;
    report.low = std::min(report.low, ratio);
    report.high = std::max(report.high, ratio);
    ++report.count;
  }
  return report;
}

double stateGrowthEnvelope(const Trajectory& traj, double beta) {
  double envelope = 0.0;
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    envelope = std::max(envelope, traj.states[t].norm() / std::pow(static_cast<double>(t), beta));
  }
  return envelope;
}

void writeLedgerCsv(std::ostream& out, const RegretLedger& ledger, const std::vector<Index>& grid) {
  out << "n,regret,chi,rho\n" << std::setprecision(17);
  for (Index n : grid) {
    if (n > ledger.horizon) continue;
    out << n << "," << ledger.regret[idx(n)] << "," << ledger.chi[idx(n)] << ","
        << ledger.rho[idx(n)] << "\n";
  }
}

}  // namespace alqr

#include "alqr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <thread>

#include "alqr/errors.hpp"
#include "alqr/geometry.hpp"
#include "alqr/policies.hpp"

namespace alqr {

namespace {

std::size_t idx(Index n) { return static_cast<std::size_t>(n); }

struct PolicyBundle {
  std::unique_ptr<Policy> policy;
  const EpisodicPolicy* episodic = nullptr;
  Matrix initial;
};

PolicyBundle makePolicy(const ExperimentConfig& c, const ReplicateSeeds& seeds,
                        const SideInformation* side) {
  PolicyBundle b;
  if (c.policy.kind == PolicyKind::Optimal) {
    b.policy = optimalPolicy(c.theta0, c.cost);
    return b;
  }
  const EpisodeSchedule schedule(c.gamma);
  const DynamicsParameter init = defaultInitialEstimate(c.theta0, c.cost, seeds.initial);
  b.initial = init.stacked();
  const Index p = c.theta0.stateDim();
  const Index q = c.theta0.regressorDim();
  switch (c.policy.kind) {
    case PolicyKind::Ce: {
      auto pol = cePolicy(schedule, init, c.cost);
      b.episodic = pol.get();
      b.policy = std::move(pol);
      break;
    }
    case PolicyKind::Rce: {
      auto pol = rcePolicy(schedule, c.policy.sigma0, init, c.cost, seeds.policy);
      b.episodic = pol.get();
      b.policy = std::move(pol);
      break;
    }
    case PolicyKind::Ts: {
      auto pol = tsPolicy(schedule, c.policy.priorScale * Matrix::Identity(q, q), init, c.cost,
                          seeds.policy);
      b.episodic = pol.get();
      b.policy = std::move(pol);
      break;
    }
    case PolicyKind::Gce: {
      const GcePerturbation rule = c.policy.cLambda > 0.0
                                       ? GcePerturbation::randomDirection(c.policy.cLambda, p, q)
                                       : GcePerturbation::none();
      auto pol = gcePolicy(schedule, *side, rule, init, c.cost, seeds.policy);
      b.episodic = pol.get();
      b.policy = std::move(pol);
      break;
    }
    case PolicyKind::Optimal: break;
  }
  return b;
}

/// theta_hat in force at each time 0..n.
std::vector<Matrix> estimatePath(const PolicyBundle& b, Index horizon) {
  std::vector<Matrix> path;
  if (b.episodic == nullptr) return path;
  path.reserve(idx(horizon + 1));
  Matrix current = b.initial;
  const auto& updates = b.episodic->updates();
  std::size_t next = 0;
  for (Index t = 0; t <= horizon; ++t) {
    while (next < updates.size() && updates[next].n <= t) {
      if (updates[next].accepted) current = updates[next].center + updates[next].perturbation;
      ++next;
    }
    path.push_back(current);
  }
  return path;
}

ReplicateResult runReplicate(const ExperimentConfig& c, int index, const std::vector<Index>& grid,
                             const std::vector<Index>& decompGrid, const SideInformation* side,
                             const AffineSubspace& p0, const std::filesystem::path& trajDir) {
  ReplicateResult r;
  r.index = index;
  r.seeds = replicateSeeds(c.seed, index);
  try {
    const std::vector<Vector> noise =
        drawNoise(NoiseModel{c.noiseKind, c.noiseCovariance, r.seeds.noise}, c.horizon);
    const Vector x0 = c.x0.value_or(Vector::Zero(c.theta0.stateDim()));
    PolicyBundle bundle = makePolicy(c, r.seeds, side);
    auto optimal = optimalPolicy(c.theta0, c.cost);
    auto [traj, opt] = simulateCoupled(c.theta0, c.cost, *bundle.policy, *optimal, noise, x0);
    r.horizon = traj.horizon();
    if (bundle.episodic != nullptr) r.exhaustedUpdates = bundle.episodic->exhaustedUpdates();
    if (!trajDir.empty()) {
      std::ofstream out(trajDir / ("trajectory-" + std::to_string(index) + ".csv"), std::ios::binary);
      writeTrajectoryCsv(out, traj, traj.hasGains());
    }

    const std::vector<double> fluct = optimalCostFluctuation(opt, c.theta0, c.cost, c.noiseCovariance);
    for (Index n : grid) r.fluctuation.push_back(fluct[idx(n)]);

    if (traj.diverged) {
      r.status = "diverged";
      return r;
    }

    const RegretLedger ledger = computeRegret(traj, opt, c.theta0, c.cost);
    const std::vector<Matrix> path = estimatePath(bundle, traj.horizon());
    std::vector<double> errors;
    if (!path.empty()) {
      const Matrix truth = c.theta0.stacked();
      errors.reserve(path.size());
      for (const Matrix& m : path) errors.push_back(operatorNorm(m - truth));
    }
    r.curves = normalizedCurves(ledger, errors, grid);
    for (Index n : grid) {
      r.chi.push_back(ledger.chi[idx(n)]);
      r.rho.push_back(ledger.rho[idx(n)]);
      r.p0Distance.push_back(path.empty() ? 0.0 : (path[idx(n)] - p0.project(path[idx(n)])).norm());
    }
    for (Index n : decompGrid) {
      DecompositionRow row;
      row.n = n;
      row.regret = ledger.regret[idx(n)];
      row.terms = decompose(traj, c.theta0, c.cost, n);
      r.decomposition.push_back(std::move(row));
    }
    r.ok = true;
    r.status = "ok";
  } catch (const std::exception& e) {
    r.ok = false;
    r.status = e.what();
  }
  return r;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<SummaryRow> summarize(const std::vector<ReplicateResult>& reps,
                                  const std::vector<Index>& grid) {
  std::vector<SummaryRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SummaryRow row;
    row.n = grid[g];
    std::vector<double> regret, nr, ne, lr, pe, fl;
    for (const auto& r : reps) {
      if (g < r.fluctuation.size()) fl.push_back(std::abs(r.fluctuation[g]));
      if (!r.ok || g >= r.curves.size()) continue;
      const CurveRow& c = r.curves[g];
      regret.push_back(c.regret);
      nr.push_back(c.normalizedRegret);
      ne.push_back(c.normalizedError);
      lr.push_back(c.logRegret);
      const double nn = static_cast<double>(row.n);
      pe.push_back(nn * r.p0Distance[g] * r.p0Distance[g] / std::log(nn));
    }
    if (!regret.empty()) {
      auto [rmin, rmax] = std::minmax_element(regret.begin(), regret.end());
      auto [nmin, nmax] = std::minmax_element(nr.begin(), nr.end());
      auto [emin, emax] = std::minmax_element(ne.begin(), ne.end());
      row.regretMin = *rmin;
      row.regretMax = *rmax;
      row.normRegretMin = *nmin;
      row.normRegretMax = *nmax;
      row.normErrorMin = *emin;
      row.normErrorMax = *emax;
    }
    row.regretMedian = median(regret);
    row.normRegretMedian = median(nr);
    row.normErrorMedian = median(ne);
    row.logRegretMedian = median(lr);
    row.p0ErrorMedian = median(pe);
    row.fluctuationMedian = median(fl);
    rows.push_back(row);
  }
  return rows;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& file) : out_(file, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::Io, "cannot write " + file.string());
  }
  CsvWriter& header(std::initializer_list<const char*> cols) {
    bool first = true;
    for (const char* c : cols) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
    return *this;
  }
  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((put(values, first)), ...);
    out_ << '\n';
  }

 private:
  void sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
  }
  void put(double v, bool& first) {
    sep(first);
    out_ << formatNumber(v);
  }
  void put(Index v, bool& first) {
    sep(first);
    out_ << v;
  }
  void put(int v, bool& first) {
    sep(first);
    out_ << v;
  }
  void put(const std::string& v, bool& first) {
    sep(first);
    out_ << v;
  }
  std::ofstream out_;
};

std::string csvSafe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Normalized regret and estimation error across replicates.

Reads summary.csv next to this script; writes figure.png.
"""
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(here, "summary.csv"))))
if not rows:
    sys.exit("summary.csv is empty")
n = [float(r["n"]) for r in rows]


def col(name):
    return [float(r[name]) for r in rows]


fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 7), sharex=True)
top.fill_between(n, col("normalized_regret_min"), col("normalized_regret_max"), alpha=0.25)
top.plot(n, col("normalized_regret_median"), lw=1.5)
top.set_ylabel(r"$R(n) / (\sqrt{n}\,\log n)$")
bottom.fill_between(n, col("normalized_error_min"), col("normalized_error_max"), alpha=0.25)
bottom.plot(n, col("normalized_error_median"), lw=1.5)
bottom.set_ylabel(r"$\|\hat\theta_n-\theta_0\|\, n^{1/4} / \log^{1/2} n$")
bottom.set_xlabel("n")
bottom.set_xscale("log")
fig.suptitle("%(title)s")
fig.tight_layout()
fig.savefig(os.path.join(here, "figure.png"), dpi=150)
)PY";

void writeOutputs(const ExperimentConfig& c, const RunRecord& rec) {
  const auto& dir = rec.outputDir;
  std::filesystem::create_directories(dir);

  {
    CsvWriter w(dir / "regret.csv");
    w.header({"replicate", "n", "regret", "chi", "rho", "normalized_regret", "log_regret"});
    for (const auto& r : rec.replicates) {
      if (!r.ok) continue;
      for (std::size_t g = 0; g < r.curves.size(); ++g) {
        const CurveRow& row = r.curves[g];
        w.row(r.index, row.n, row.regret, r.chi[g], r.rho[g], row.normalizedRegret, row.logRegret);
      }
    }
  }
  {
    CsvWriter w(dir / "estimation.csv");
    w.header({"replicate", "n", "error", "normalized_error", "p0_distance",
              "normalized_p0_error"});
    for (const auto& r : rec.replicates) {
      if (!r.ok) continue;
      for (std::size_t g = 0; g < r.curves.size(); ++g) {
        const CurveRow& row = r.curves[g];
        const double nn = static_cast<double>(row.n);
        const double d = r.p0Distance[g];
        w.row(r.index, row.n, row.error, row.normalizedError, d, nn * d * d / std::log(nn));
      }
    }
  }
  {
    CsvWriter w(dir / "decomposition.csv");
    w.header({"replicate", "n", "regret", "z", "s", "t", "total", "residual"});
    for (const auto& r : rec.replicates) {
      for (const auto& d : r.decomposition) {
        w.row(r.index, d.n, d.regret, d.terms.zN, d.terms.sN, d.terms.tN, d.terms.total(),
              d.regret - d.terms.total());
      }
    }
  }
  {
    CsvWriter w(dir / "summary.csv");
    w.header({"n", "regret_median", "regret_min", "regret_max", "normalized_regret_median",
              "normalized_regret_min", "normalized_regret_max", "normalized_error_median",
              "normalized_error_min", "normalized_error_max", "log_regret_median",
              "normalized_p0_error_median", "abs_fluctuation_median"});
    for (const auto& s : rec.summary) {
      w.row(s.n, s.regretMedian, s.regretMin, s.regretMax, s.normRegretMedian, s.normRegretMin,
            s.normRegretMax, s.normErrorMedian, s.normErrorMin, s.normErrorMax, s.logRegretMedian,
            s.p0ErrorMedian, s.fluctuationMedian);
    }
  }
  {
    CsvWriter w(dir / "replicates.csv");
    w.header({"replicate", "seed", "status", "horizon", "exhausted_updates"});
    for (const auto& r : rec.replicates) {
      w.row(r.index, std::to_string(r.seeds.base), csvSafe(r.status), r.horizon,
            r.exhaustedUpdates);
    }
  }
  {
    std::ofstream out(dir / "run.json", std::ios::binary);
    out << "{\n  \"config_hash\": \"" << rec.configHash << "\",\n  \"succeeded\": "
        << rec.succeeded() << ",\n  \"replicates\": " << rec.replicates.size()
        << ",\n  \"config\": ";
    std::string canon = canonicalConfig(c);
    std::string indented;
    for (char ch : canon) {
      indented += ch;
      if (ch == '\n') indented += "  ";
    }
    out << indented << "\n}\n";
  }
  {
    std::string title = toString(c.policy.kind) + ", " + c.systemName + " system, gamma = " +
                        formatNumber(c.gamma) + ", " + std::to_string(c.replicates) +
                        " replicates";
    std::string script = kPlotScript;
    const std::string key = "%(title)s";
    script.replace(script.find(key), key.size(), title);
    std::ofstream out(dir / "plot.py", std::ios::binary);
    out << script;
  }
}

}  // namespace

ReplicateSeeds replicateSeeds(std::uint64_t baseSeed, int index) {
  ReplicateSeeds s;
  s.base = baseSeed ^ splitmix64(static_cast<std::uint64_t>(index));
  s.noise = splitmix64(s.base ^ 0x6e6f697365ULL);
  s.policy = splitmix64(s.base ^ 0x706f6c6963ULL);
  s.initial = splitmix64(s.base ^ 0x696e6974ULL);
  return s;
}

int RunRecord::succeeded() const {
  return static_cast<int>(
      std::count_if(replicates.begin(), replicates.end(), [](const auto& r) { return r.ok; }));
}

std::string formatNumber(double value) {
  if (value == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::vector<double> summaryColumn(const RunRecord& record, double SummaryRow::*column) {
  std::vector<double> out;
  out.reserve(record.summary.size());
  for (const auto& row : record.summary) out.push_back(row.*column);
  return out;
}

std::filesystem::path resolveOutputDir(const ExperimentConfig& config) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return std::filesystem::path(env);
  }
  return config.output;
}

RunRecord runExperiment(const ExperimentConfig& config, const RunOptions& options) {
  validateConfig(config);
  RunRecord rec;
  rec.configHash = configHash(config);
  rec.grid = logGrid(std::min<Index>(10, config.horizon), config.horizon, config.gridPerDecade);
  const std::vector<Index> decompGrid =
      logGrid(std::min<Index>(10, config.horizon), config.horizon, config.decompositionPerDecade);

  std::unique_ptr<SideInformation> side;
  if (config.policy.kind == PolicyKind::Gce) {
    side = std::make_unique<SideInformation>(
        resolveSide(config.policy.side, config.theta0, config.cost));
  }
  const AffineSubspace p0 = constructP0(config.theta0, config.cost);

  std::filesystem::path trajDir;
  if (options.writeFiles && config.writeTrajectories) {
    trajDir = resolveOutputDir(config);
    std::filesystem::create_directories(trajDir);
  }

  const int requested = options.threads > 0 ? options.threads : config.threads;
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int workers = std::clamp(requested > 0 ? requested : hw, 1, config.replicates);

  rec.replicates.resize(static_cast<std::size_t>(config.replicates));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < config.replicates; i = next++) {
      rec.replicates[static_cast<std::size_t>(i)] =
          runReplicate(config, i, rec.grid, decompGrid, side.get(), p0, trajDir);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  rec.summary = summarize(rec.replicates, rec.grid);
  if (options.writeFiles) {
    rec.outputDir = resolveOutputDir(config);
    writeOutputs(config, rec);
  }
  return rec;
}

}  // namespace alqr

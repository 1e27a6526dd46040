#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alqr/config.hpp"
#include "alqr/regret.hpp"

namespace alqr {

/// Seeds a replicate draws from: noise, policy randomness, initial estimate.
struct ReplicateSeeds {
  std::uint64_t base = 0;
  std::uint64_t noise = 0;
  std::uint64_t policy = 0;
  std::uint64_t initial = 0;
};

/// base XOR splitmix64(index), then one splitmix64 per stream.
ReplicateSeeds replicateSeeds(std::uint64_t baseSeed, int index);

struct DecompositionRow {
  Index n = 0;
  double regret = 0.0;
  DecompositionTerms terms;
};

struct ReplicateResult {
  int index = 0;
  ReplicateSeeds seeds;
  bool ok = false;
  std::string status;  ///< "ok", "diverged" or the error text
  Index horizon = 0;
  int exhaustedUpdates = 0;
  std::vector<CurveRow> curves;          ///< on the run grid
  std::vector<double> chi;               ///< chi_n on the run grid
  std::vector<double> rho;               ///< rho_n on the run grid
  std::vector<double> p0Distance;        ///< inf over P0 of ||theta_hat_n - theta||, on the grid
  std::vector<double> fluctuation;       ///< optimal-cost fluctuation f_n on the grid
  std::vector<DecompositionRow> decomposition;
};

/// Median, min and max across successful replicates at each grid point.
struct SummaryRow {
  Index n = 0;
  double regretMedian = 0.0, regretMin = 0.0, regretMax = 0.0;
  double normRegretMedian = 0.0, normRegretMin = 0.0, normRegretMax = 0.0;
  double normErrorMedian = 0.0, normErrorMin = 0.0, normErrorMax = 0.0;
  double logRegretMedian = 0.0;
  double p0ErrorMedian = 0.0;  ///< n inf_{P0} ||theta_hat - theta||^2 / log n
  double fluctuationMedian = 0.0;  ///< median of |f_n|
};

struct RunRecord {
  std::string configHash;
  std::vector<Index> grid;
  std::vector<ReplicateResult> replicates;
  std::vector<SummaryRow> summary;
  std::filesystem::path outputDir;  ///< empty when nothing was written

  int succeeded() const;
};

struct RunOptions {
  bool writeFiles = true;
  /// Overrides config.threads when > 0.
  int threads = 0;
};

/// Simulates every replicate against the optimal regulator on shared noise,
/// computes ledgers, decompositions and normalized curves, and (optionally)
/// writes regret.csv, estimation.csv, decomposition.csv, summary.csv,
/// replicates.csv, run.json and plot.py. The output directory is
/// config.output unless ALQR_OUTPUT_DIR is set. Replicate failures are
/// recorded, not thrown.
RunRecord runExperiment(const ExperimentConfig& config, const RunOptions& options = {});

/// The output directory the run will use.
std::filesystem::path resolveOutputDir(const ExperimentConfig& config);

/// "%.12g"; the single number format of every CSV.
std::string formatNumber(double value);

/// One summary column across the run grid.
std::vector<double> summaryColumn(const RunRecord& record, double SummaryRow::*column);

}  // namespace alqr

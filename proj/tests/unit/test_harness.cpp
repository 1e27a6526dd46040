#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/harness.hpp"

using namespace alqr;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("alqr-harness-" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode codeOf(const std::string& text, const fs::path& base = {}) {
  try {
    parseConfig(text, base);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

ExperimentConfig small(const std::string& policy, Index horizon, int reps) {
  ExperimentConfig c = parseConfig("{\"policy\": \"" + policy + "\"}");
  c.horizon = horizon;
  c.replicates = reps;
  c.gridPerDecade = 10;
  return c;
}

}  // namespace

TEST(Config, DefaultsMatchTheReferenceSystem) {
  const ExperimentConfig c = parseConfig("{}");
  EXPECT_EQ(c.systemName, "reference");
  EXPECT_DOUBLE_EQ(c.gamma, 1.2);
  EXPECT_EQ(c.policy.kind, PolicyKind::Rce);
  EXPECT_TRUE(c.theta0.a.isApprox(presetDynamics("reference").a));
  EXPECT_TRUE(c.noiseCovariance.isApprox(Matrix::Identity(3, 3)));
}

TEST(Config, RejectsInvalidFields) {
  EXPECT_EQ(codeOf(R"({"gamma": 1.0})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(codeOf(R"({"gamma": 0.5})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(codeOf(R"({"policy": "bandit"})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(codeOf(R"({"horizon": 0})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(codeOf(R"({"system": "nonexistent"})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(codeOf(R"({"replicates": 0})"), ErrorCode::InvalidConfig);
  EXPECT_EQ(codeOf("{not json"), ErrorCode::InvalidConfig);
}

TEST(Config, MissingSideFileIsRejectedBeforeRunning) {
  const fs::path d = scratchDir("missing-side");
  EXPECT_EQ(codeOf(R"({"policy": {"kind": "gce", "side": {"kind": "file", "path": "nope.json"}}})", d),
            ErrorCode::InvalidConfig);
}

TEST(Config, SideFileResolvesRelativeToConfig) {
  const fs::path d = scratchDir("side-file");
  std::ofstream(d / "mask.json") << R"({"kind": "support", "mask": [[1,1,1,1,1,1],[1,1,1,1,1,1],[1,1,1,1,1,1]]})";
  const ExperimentConfig c =
      parseConfig(R"({"policy": {"kind": "gce", "side": {"kind": "file", "path": "mask.json"}}})", d);
  const SideInformation side = resolveSide(c.policy.side, c.theta0, c.cost);
  EXPECT_TRUE(side.contains(c.theta0.stacked()));
}

TEST(Config, HashIgnoresKeyOrderAndTracksValues) {
  const auto a = parseConfig(R"({"horizon": 500, "seed": 3})");
  const auto b = parseConfig(R"({"seed": 3, "horizon": 500})");
  const auto c = parseConfig(R"({"seed": 4, "horizon": 500})");
  EXPECT_EQ(configHash(a), configHash(b));
  EXPECT_NE(configHash(a), configHash(c));
  EXPECT_EQ(configHash(a).size(), 16u);
}

TEST(Seeds, StreamsAreDistinctAndStable) {
  const ReplicateSeeds s0 = replicateSeeds(20240611, 0);
  const ReplicateSeeds again = replicateSeeds(20240611, 0);
  EXPECT_EQ(s0.noise, again.noise);
  EXPECT_EQ(s0.base, 20240611ULL ^ splitmix64(0));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 50; ++i) {
    const ReplicateSeeds s = replicateSeeds(20240611, i);
    seen.insert(s.noise);
    seen.insert(s.policy);
    seen.insert(s.initial);
  }
  EXPECT_EQ(seen.size(), 150u);
}

TEST(Harness, OptimalPolicyHasZeroRegret) {
  ExperimentConfig c = small("optimal", 2000, 2);
  const RunRecord rec = runExperiment(c, RunOptions{false, 1});
  ASSERT_EQ(rec.succeeded(), 2);
  for (const auto& r : rec.replicates) {
    for (const auto& row : r.curves) EXPECT_EQ(row.regret, 0.0);
    for (const auto& d : r.decomposition) EXPECT_NEAR(d.terms.total(), 0.0, 1e-9);
  }
}

TEST(Harness, WritesTheDocumentedFiles) {
  const fs::path d = scratchDir("files");
  ExperimentConfig c = small("rce", 1000, 2);
  c.output = d;
  const RunRecord rec = runExperiment(c, RunOptions{true, 1});
  ASSERT_EQ(rec.outputDir, d);
  for (const char* f : {"regret.csv", "estimation.csv", "decomposition.csv", "summary.csv",
                        "replicates.csv", "run.json", "plot.py"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  std::ifstream in(d / "regret.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "replicate,n,regret,chi,rho,normalized_regret,log_regret");
}

TEST(Harness, OutputDirectoryEnvironmentOverride) {
  const fs::path d = scratchDir("env");
  ExperimentConfig c = small("ce", 200, 1);
  c.output = "should-not-be-used";
  ::setenv(kOutputDirEnv, d.c_str(), 1);
  EXPECT_EQ(resolveOutputDir(c), d);
  const RunRecord rec = runExperiment(c, RunOptions{true, 1});
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(rec.outputDir, d);
  EXPECT_TRUE(fs::exists(d / "summary.csv"));
  EXPECT_EQ(resolveOutputDir(c), fs::path("should-not-be-used"));
}

TEST(Harness, ByteIdenticalAcrossThreadCounts) {
  for (const char* policy : {"rce", "ts", "gce"}) {
    const fs::path one = scratchDir(std::string("det1-") + policy);
    const fs::path three = scratchDir(std::string("det3-") + policy);
    ExperimentConfig c = small(policy, 800, 3);
    c.output = one;
    runExperiment(c, RunOptions{true, 1});
    c.output = three;
    runExperiment(c, RunOptions{true, 3});
    for (const char* f : {"regret.csv", "estimation.csv", "decomposition.csv", "summary.csv"}) {
      EXPECT_EQ(slurp(one / f), slurp(three / f)) << policy << " " << f;
    }
  }
}

TEST(Harness, SummaryIsMedianOfReplicates) {
  ExperimentConfig c = small("rce", 500, 3);
  const RunRecord rec = runExperiment(c, RunOptions{false, 1});
  ASSERT_EQ(rec.succeeded(), 3);
  for (std::size_t g = 0; g < rec.grid.size(); ++g) {
    std::vector<double> v;
    for (const auto& r : rec.replicates) v.push_back(r.curves[g].regret);
    std::sort(v.begin(), v.end());
    EXPECT_DOUBLE_EQ(rec.summary[g].regretMedian, v[1]);
    EXPECT_DOUBLE_EQ(rec.summary[g].regretMin, v[0]);
    EXPECT_DOUBLE_EQ(rec.summary[g].regretMax, v[2]);
  }
}

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(formatNumber(0.0), "0");
  EXPECT_EQ(formatNumber(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(formatNumber(1e20), "1e+20");
}

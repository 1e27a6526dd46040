// alqr: run experiments, verify invariants, inspect geometry, decompose regret.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "alqr/config.hpp"
#include "alqr/errors.hpp"
#include "alqr/geometry.hpp"
#include "alqr/harness.hpp"
#include "alqr/policies.hpp"
#include "alqr/regret.hpp"
#include "alqr/verify.hpp"

using namespace alqr;
using nlohmann::json;

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A system file holds either {"preset": "reference"} or inline a, b, q, r.
ExperimentConfig loadSystem(const std::string& path) {
  return parseConfig("{\"system\": " + readFile(path) + "}");
}

json toJson(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

int runCommand(const std::string& configPath, const std::string& output, int threads) {
  ExperimentConfig config = loadConfig(configPath);
  if (!output.empty()) config.output = output;
  const RunRecord rec = runExperiment(config, RunOptions{true, threads});
  std::printf("config %s: %d/%zu replicates ok, output %s\n", rec.configHash.c_str(),
              rec.succeeded(), rec.replicates.size(), rec.outputDir.string().c_str());
  for (const auto& r : rec.replicates) {
    if (!r.ok) std::printf("  replicate %d: %s\n", r.index, r.status.c_str());
  }
  if (!rec.summary.empty()) {
    const SummaryRow& last = rec.summary.back();
    std::printf("n = %ld: median regret %.6g, normalized regret %.6g, normalized error %.6g\n",
                static_cast<long>(last.n), last.regretMedian, last.normRegretMedian,
                last.normErrorMedian);
  }
  return rec.succeeded() == static_cast<int>(rec.replicates.size()) ? 0 : 3;
}

int verifyCommand(const std::string& level, bool injectBug, int threads) {
  VerifyOptions o;
  o.level = level == "full" ? VerifyLevel::Full : VerifyLevel::Fast;
  o.negateT = injectBug;
  o.threads = threads;
  const VerifyReport rep = verifySuite(o);
  for (const auto& c : rep.checks) {
    std::printf("[%s] %-28s %7.2fs  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.seconds,
                c.detail.c_str());
  }
  std::printf("%s\n", rep.passed() ? "all checks passed" : "some checks failed");
  return rep.passed() ? 0 : 1;
}

int geometryCommand(const std::string& theta0Path, int samples, const std::string& out) {
  const ExperimentConfig sys = loadSystem(theta0Path);
  const DynamicsParameter& theta0 = sys.theta0;
  const CostSpec& cost = sys.cost;
  const Index p = theta0.stateDim();
  const Index r = theta0.inputDim();
  const RiccatiSolution sol = solveRiccati(theta0, cost);

  json report;
  report["p"] = p;
  report["r"] = r;
  report["rank_a"] = rank(theta0.a);
  report["rank_b"] = rank(theta0.b);
  report["riccati"] = {{"k", toJson(sol.k)},
                       {"l", toJson(sol.l)},
                       {"iterations", sol.iterations},
                       {"residual", sol.residual},
                       {"closed_loop_radius", spectralRadius(theta0.a + theta0.b * sol.l).radius}};

  const AffineSubspace p0 = constructP0(theta0, cost);
  json basis = json::array();
  json members = json::array();
  for (const Matrix& d : p0.basis) {
    basis.push_back(toJson(d));
    const auto m = verifyP0Membership(DynamicsParameter::fromStacked(p0.basePoint + d, p), theta0, cost);
    members.push_back({{"same_feedback", m.sameFeedback},
                       {"same_closed_loop", m.sameClosedLoop},
                       {"feedback_gap", m.feedbackGap},
                       {"closed_loop_gap", m.closedLoopGap},
                       {"riccati_gap", m.riccatiGap}});
  }
  report["p0"] = {{"dimension", p0.dimension()},
                  {"expected", (p - rank(theta0.a)) * r},
                  {"base", toJson(p0.basePoint)},
                  {"basis", basis},
                  {"membership", members}};

  const TangentReport t = tangentDimension(theta0, cost, 2 * p * (p + r));
  report["tangent"] = {
      {"dimension", t.dimension}, {"expected", t.expected}, {"operator_rank", t.operatorRank}};

  const LipschitzReport lip = lipschitzDiagnostic(theta0, cost, 0.05, samples);
  report["lipschitz"] = {{"radius", 0.05}, {"max_ratio", lip.maxRatio}, {"samples", lip.samples}};

  const auto full = identifiabilityCheck(SideInformation::unconstrained(p, p + r), theta0, cost, samples);
  const SubspaceConstraints sub = identifiableSubspace(theta0, cost);
  const auto restricted = identifiabilityCheck(sub.side, theta0, cost, samples);
  auto ident = [](const IdentifiabilityReport& x) {
    return json{{"holds", x.holds},
                {"estimated_constant", std::isfinite(x.estimatedConstant) ? json(x.estimatedConstant)
                                                                           : json("inf")},
                {"samples", x.samples},
                {"targeted_probes", x.targetedProbes},
                {"off_truth_kernel_violation", x.offTruthKernelViolation}};
  };
  report["identifiability"] = {{"unconstrained", ident(full)},
                               {"identifiable_subspace", ident(restricted)},
                               {"subspace_constraints", sub.constraints.size()}};

  const std::string text = report.dump(2);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream(out) << text << "\n";
  }
  return 0;
}

int decomposeCommand(const std::string& trajectoryPath, const std::string& systemPath,
                     std::vector<Index> horizons) {
  std::ifstream in(trajectoryPath);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + trajectoryPath);
  Trajectory traj = readTrajectoryCsv(in);
  const ExperimentConfig sys =
      systemPath.empty() ? parseConfig("{\"system\": \"reference\"}") : loadSystem(systemPath);
  reconstructNoise(traj, sys.theta0);
  auto optimal = optimalPolicy(sys.theta0, sys.cost);
  const Trajectory opt = simulate(sys.theta0, sys.cost, *optimal, traj.noises, traj.states.front());
  const RegretLedger ledger = computeRegret(traj, opt, sys.theta0, sys.cost);
  if (horizons.empty()) horizons.push_back(traj.horizon());

  std::printf("n,regret,z,s,t,total,residual\n");
  for (Index n : horizons) {
    if (n < 1 || n > traj.horizon()) throw Error(ErrorCode::InvalidConfig, "n out of range");
    const DecompositionTerms d = decompose(traj, sys.theta0, sys.cost, n);
    const double rn = ledger.regret[static_cast<std::size_t>(n)];
    std::printf("%ld,%s,%s,%s,%s,%s,%s\n", static_cast<long>(n), formatNumber(rn).c_str(),
                formatNumber(d.zN).c_str(), formatNumber(d.sN).c_str(), formatNumber(d.tN).c_str(),
                formatNumber(d.total()).c_str(), formatNumber(rn - d.total()).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive LQ regulators: simulation, regret decomposition, geometry"};
  app.require_subcommand(1);

  std::string configPath, output;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment config and write CSVs + plot script");
  run->add_option("config", configPath, "JSON experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Output directory (ALQR_OUTPUT_DIR still wins)");
  run->add_option("-j,--threads", threads, "Worker threads (default: config or all cores)");

  std::string level = "fast";
  bool injectBug = false;
  auto* verify = app.add_subcommand("verify", "Run the invariant battery");
  verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_flag("--inject-bug", injectBug, "Negate T_n to demonstrate the identity check fails");
  verify->add_option("-j,--threads", threads, "Worker threads");

  std::string theta0Path, jsonOut;
  int samples = 500;
  auto* geometry = app.add_subcommand("geometry", "Emit a JSON report on P0, tangent space, identifiability");
  geometry->add_option("--theta0", theta0Path, "System file: {\"preset\": ...} or a, b, q, r")
      ->required()
      ->check(CLI::ExistingFile);
  geometry->add_option("--samples", samples, "Monte-Carlo samples for the ratio diagnostics");
  geometry->add_option("--out", jsonOut, "Write the JSON here instead of stdout");

  std::string trajectoryPath, systemPath;
  std::vector<Index> horizons;
  auto* decompose = app.add_subcommand("decompose", "Regret decomposition of a recorded trajectory");
  decompose->add_option("--trajectory", trajectoryPath, "Trajectory CSV with gain columns")
      ->required()
      ->check(CLI::ExistingFile);
  decompose->add_option("--system", systemPath, "System file (default: reference preset)")
      ->check(CLI::ExistingFile);
  decompose->add_option("-n", horizons, "Horizons to evaluate (default: full length)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return runCommand(configPath, output, threads);
    if (*verify) return verifyCommand(level, injectBug, threads);
    if (*geometry) return geometryCommand(theta0Path, samples, jsonOut);
    if (*decompose) return decomposeCommand(trajectoryPath, systemPath, horizons);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

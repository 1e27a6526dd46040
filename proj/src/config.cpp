#include "alqr/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "alqr/errors.hpp"
#include "alqr/geometry.hpp"

namespace alqr {

using nlohmann::json;

namespace {

Matrix fromRows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& row : rows) {
    Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix referenceQ() {
  return fromRows({{0.65, -0.08, -0.14}, {-0.08, 0.57, 0.26}, {-0.14, 0.26, 2.50}});
}

Matrix referenceR() {
  return fromRows({{0.20, 0.05, 0.08}, {0.05, 0.14, 0.04}, {0.08, 0.04, 0.24}});
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

Matrix matrixFrom(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) invalid(field + ": expected a non-empty array of rows");
  const auto rows = static_cast<Index>(j.size());
  if (!j[0].is_array() || j[0].empty()) invalid(field + ": rows must be non-empty arrays");
  const auto cols = static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      invalid(field + ": ragged rows");
    }
    for (Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) invalid(field + ": entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

json matrixJson(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    invalid(std::string("field '") + key + "' has the wrong type");
  }
}

PolicyKind policyKindFrom(const std::string& s) {
  if (s == "optimal") return PolicyKind::Optimal;
  if (s == "ce") return PolicyKind::Ce;
  if (s == "rce") return PolicyKind::Rce;
  if (s == "ts") return PolicyKind::Ts;
  if (s == "gce") return PolicyKind::Gce;
  invalid("policy.kind must be one of optimal, ce, rce, ts, gce (got '" + s + "')");
}

std::string sideSourceName(SideSource s) {
  switch (s) {
    case SideSource::TrueSupport: return "true_support";
    case SideSource::Support: return "support";
    case SideSource::IdentifiableSubspace: return "identifiable_subspace";
    case SideSource::Unconstrained: return "unconstrained";
    case SideSource::File: return "file";
  }
  return "?";
}

SideSpec sideFrom(const json& j, const std::filesystem::path& baseDir) {
  SideSpec spec;
  if (!j.is_object()) invalid("policy.side must be an object");
  const auto kind = field<std::string>(j, "kind", "true_support");
  if (kind == "true_support") {
    spec.source = SideSource::TrueSupport;
  } else if (kind == "support") {
    spec.source = SideSource::Support;
    if (!j.contains("mask")) invalid("policy.side.mask is required for kind 'support'");
    spec.mask = matrixFrom(j.at("mask"), "policy.side.mask");
  } else if (kind == "identifiable_subspace") {
    spec.source = SideSource::IdentifiableSubspace;
  } else if (kind == "unconstrained") {
    spec.source = SideSource::Unconstrained;
  } else if (kind == "file") {
    spec.source = SideSource::File;
    std::filesystem::path path = field<std::string>(j, "path", "");
    if (path.empty()) invalid("policy.side.path is required for kind 'file'");
    if (path.is_relative() && !baseDir.empty()) path = baseDir / path;
    spec.file = path;
  } else {
    invalid("unknown policy.side.kind '" + kind + "'");
  }
  return spec;
}

std::string fnvHex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

DynamicsParameter presetDynamics(const std::string& name) {
  if (name == "reference") {
    return {fromRows({{1.04, 0.0, -0.27}, {0.52, -0.81, 0.83}, {0.0, 0.04, -0.90}}),
            fromRows({{-0.47, 0.61, -0.29}, {-0.50, 0.58, 0.25}, {0.29, 0.0, -0.72}})};
  }
  if (name == "sparse") {
    return {fromRows({{1.04, 0.0, 0.0}, {0.0, -0.81, 0.0}, {0.0, 0.0, -0.90}}),
            fromRows({{-0.47, 0.61, 0.0}, {0.0, 0.58, 0.25}, {0.29, 0.0, 0.0}})};
  }
  invalid("unknown system preset '" + name + "' (known: reference, sparse)");
}

CostSpec presetCost(const std::string& name) {
  if (name == "reference" || name == "sparse") return CostSpec{referenceQ(), referenceR()};
  invalid("unknown system preset '" + name + "'");
}

std::string toString(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Optimal: return "optimal";
    case PolicyKind::Ce: return "ce";
    case PolicyKind::Rce: return "rce";
    case PolicyKind::Ts: return "ts";
    case PolicyKind::Gce: return "gce";
  }
  return "?";
}

ExperimentConfig parseConfig(const std::string& text, const std::filesystem::path& baseDir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) invalid("config must be a JSON object");

  ExperimentConfig c;
  const json sys = j.contains("system") ? j.at("system") : json("reference");
  if (sys.is_string()) {
    c.systemName = sys.get<std::string>();
    c.theta0 = presetDynamics(c.systemName);
    c.cost = presetCost(c.systemName);
  } else if (sys.is_object() && sys.contains("preset")) {
    c.systemName = sys.at("preset").get<std::string>();
    c.theta0 = presetDynamics(c.systemName);
    c.cost = presetCost(c.systemName);
  } else if (sys.is_object()) {
    c.systemName = "inline";
    for (const char* k : {"a", "b", "q", "r"}) {
      if (!sys.contains(k)) invalid(std::string("system.") + k + " is required for inline systems");
    }
    try {
      c.theta0 = DynamicsParameter(matrixFrom(sys.at("a"), "system.a"),
                                   matrixFrom(sys.at("b"), "system.b"));
      c.cost = CostSpec{matrixFrom(sys.at("q"), "system.q"), matrixFrom(sys.at("r"), "system.r")};
      validateCost(c.cost, c.theta0);
    } catch (const Error& e) {
      invalid(std::string("system: ") + e.what());
    }
  } else {
    invalid("system must be a preset name or an object");
  }
  const Index p = c.theta0.stateDim();

  c.noiseCovariance = Matrix::Identity(p, p);
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    const auto kind = field<std::string>(n, "kind", "gaussian");
    if (kind == "gaussian") {
      c.noiseKind = NoiseKind::Gaussian;
    } else if (kind == "uniform") {
      c.noiseKind = NoiseKind::ScaledUniform;
    } else {
      invalid("noise.kind must be 'gaussian' or 'uniform'");
    }
    if (n.contains("covariance")) {
      const json& cov = n.at("covariance");
      if (cov.is_number()) {
        c.noiseCovariance = cov.get<double>() * Matrix::Identity(p, p);
      } else {
        c.noiseCovariance = matrixFrom(cov, "noise.covariance");
      }
    }
  }

  if (j.contains("policy")) {
    const json& pol = j.at("policy");
    if (pol.is_string()) {
      c.policy.kind = policyKindFrom(pol.get<std::string>());
    } else {
      c.policy.kind = policyKindFrom(field<std::string>(pol, "kind", "rce"));
      c.policy.sigma0 = field<double>(pol, "sigma0", c.policy.sigma0);
      c.policy.priorScale = field<double>(pol, "prior_scale", c.policy.priorScale);
      c.policy.cLambda = field<double>(pol, "c_lambda", c.policy.cLambda);
      if (pol.contains("side")) c.policy.side = sideFrom(pol.at("side"), baseDir);
    }
  }

  c.gamma = field<double>(j, "gamma", c.gamma);
  c.horizon = field<Index>(j, "horizon", c.horizon);
  c.replicates = field<int>(j, "replicates", c.replicates);
  c.seed = field<std::uint64_t>(j, "seed", c.seed);
  c.output = field<std::string>(j, "output", c.output.string());
  c.threads = field<int>(j, "threads", c.threads);
  c.gridPerDecade = field<int>(j, "grid_per_decade", c.gridPerDecade);
  c.decompositionPerDecade = field<int>(j, "decomposition_per_decade", c.decompositionPerDecade);
  c.writeTrajectories = field<bool>(j, "write_trajectories", c.writeTrajectories);
  if (j.contains("x0")) {
    const auto v = field<std::vector<double>>(j, "x0", {});
    c.x0 = Vector::Map(v.data(), static_cast<Index>(v.size()));
  }
  validateConfig(c);
  return c;
}

ExperimentConfig loadConfig(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parseConfig(ss.str(), file.parent_path());
}

void validateConfig(const ExperimentConfig& c) {
  const Index p = c.theta0.stateDim();
  if (!(c.gamma > 1.0)) invalid("gamma must be > 1");
  if (c.horizon < 1) invalid("horizon must be >= 1");
  if (c.replicates < 1) invalid("replicates must be >= 1");
  if (c.threads < 0) invalid("threads must be >= 0");
  if (c.gridPerDecade < 1 || c.decompositionPerDecade < 1) {
    invalid("grid densities must be >= 1");
  }
  if (c.noiseCovariance.rows() != p || c.noiseCovariance.cols() != p) {
    invalid("noise.covariance must be p x p");
  }
  if (c.x0 && c.x0->size() != p) invalid("x0 must have p entries");
  if (c.policy.sigma0 < 0.0) invalid("policy.sigma0 must be >= 0");
  if (!(c.policy.priorScale > 0.0)) invalid("policy.prior_scale must be > 0");
  if (c.policy.cLambda < 0.0) invalid("policy.c_lambda must be >= 0");
  const SideSpec& side = c.policy.side;
  if (c.policy.kind == PolicyKind::Gce) {
    if (side.source == SideSource::File && !std::filesystem::exists(side.file)) {
      invalid("side-information file does not exist: " + side.file.string());
    }
    if (side.source == SideSource::Support &&
        (side.mask.rows() != p || side.mask.cols() != c.theta0.regressorDim())) {
      invalid("policy.side.mask must be p x (p + r)");
    }
  }
}

std::string canonicalConfig(const ExperimentConfig& c) {
  json j;
  j["system"] = {{"name", c.systemName},
                 {"a", matrixJson(c.theta0.a)},
                 {"b", matrixJson(c.theta0.b)},
                 {"q", matrixJson(c.cost.q)},
                 {"r", matrixJson(c.cost.r)}};
  j["noise"] = {{"kind", c.noiseKind == NoiseKind::Gaussian ? "gaussian" : "uniform"},
                {"covariance", matrixJson(c.noiseCovariance)}};
  json side = {{"kind", sideSourceName(c.policy.side.source)}};
  if (c.policy.side.source == SideSource::Support) side["mask"] = matrixJson(c.policy.side.mask);
  if (c.policy.side.source == SideSource::File) side["path"] = c.policy.side.file.string();
  j["policy"] = {{"kind", toString(c.policy.kind)},
                 {"sigma0", c.policy.sigma0},
                 {"prior_scale", c.policy.priorScale},
                 {"c_lambda", c.policy.cLambda},
                 {"side", side}};
  j["gamma"] = c.gamma;
  j["horizon"] = c.horizon;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["grid_per_decade"] = c.gridPerDecade;
  j["decomposition_per_decade"] = c.decompositionPerDecade;
  j["write_trajectories"] = c.writeTrajectories;
  if (c.x0) j["x0"] = std::vector<double>(c.x0->data(), c.x0->data() + c.x0->size());
  return j.dump(2);
}

std::string configHash(const ExperimentConfig& config) { return fnvHex(canonicalConfig(config)); }

SideInformation loadSideFile(const std::filesystem::path& file, Index p, Index q) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::Io, "cannot open side-information file " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    invalid("side-information file is not valid JSON: " + std::string(e.what()));
  }
  const auto kind = field<std::string>(j, "kind", "");
  if (kind == "support") {
    const Matrix mask = matrixFrom(j.at("mask"), "mask");
    if (mask.rows() != p || mask.cols() != q) invalid("side-information mask must be p x q");
    return SideInformation::support(mask);
  }
  if (kind == "subspace") {
    AffineSubspace set;
    set.basePoint = matrixFrom(j.at("base"), "base");
    std::vector<Matrix> dirs;
    for (const auto& d : j.at("basis")) dirs.push_back(matrixFrom(d, "basis"));
    for (const auto& d : dirs) {
      if (d.rows() != p || d.cols() != q) invalid("side-information basis must be p x q");
    }
    if (set.basePoint.rows() != p || set.basePoint.cols() != q) {
      invalid("side-information base must be p x q");
    }
    set.basis = orthonormalize(dirs);
    return SideInformation::subspace(std::move(set));
  }
  invalid("side-information file kind must be 'support' or 'subspace'");
}

SideInformation resolveSide(const SideSpec& spec, const DynamicsParameter& theta0,
                            const CostSpec& cost) {
  const Index p = theta0.stateDim();
  const Index q = theta0.regressorDim();
  switch (spec.source) {
    case SideSource::TrueSupport: return SideInformation::supportOf(theta0.stacked());
    case SideSource::Support: return SideInformation::support(spec.mask);
    case SideSource::IdentifiableSubspace: return identifiableSubspace(theta0, cost).side;
    case SideSource::Unconstrained: return SideInformation::unconstrained(p, q);
    case SideSource::File: return loadSideFile(spec.file, p, q);
  }
  return SideInformation::unconstrained(p, q);
}

}  // namespace alqr

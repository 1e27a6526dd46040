#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "alqr/model.hpp"
#include "alqr/side_information.hpp"
#include "alqr/system.hpp"

namespace alqr {

/// Named systems. "reference" is the 3x3 simulation system with gamma = 1.2;
/// "sparse" is a sparse 3x3 instance whose support is identifiable.
DynamicsParameter presetDynamics(const std::string& name);
CostSpec presetCost(const std::string& name);

enum class PolicyKind { Optimal, Ce, Rce, Ts, Gce };

std::string toString(PolicyKind kind);

enum class SideSource { TrueSupport, Support, IdentifiableSubspace, Unconstrained, File };

struct SideSpec {
  SideSource source = SideSource::TrueSupport;
  Matrix mask;                 // Support
  std::filesystem::path file;  // File
};

struct PolicySpec {
  PolicyKind kind = PolicyKind::Rce;
  double sigma0 = 0.1;
  double priorScale = 1.0;  // Sigma_0 = priorScale * I
  double cLambda = 0.0;
  SideSpec side;
};

struct ExperimentConfig {
  std::string systemName = "reference";  // preset name, or "inline"
  DynamicsParameter theta0;
  CostSpec cost;
  NoiseKind noiseKind = NoiseKind::Gaussian;
  Matrix noiseCovariance;
  PolicySpec policy;
  double gamma = 1.2;
  Index horizon = 100000;
  int replicates = 10;
  std::uint64_t seed = 20240611;
  std::optional<Vector> x0;
  std::filesystem::path output = "out";
  int threads = 0;            // 0: hardware concurrency
  int gridPerDecade = 40;     // summary and curve grid
  int decompositionPerDecade = 4;
  bool writeTrajectories = false;  // trajectory-<k>.csv with gains per replicate
};

/// Environment variable that replaces the configured output directory.
inline constexpr const char* kOutputDirEnv = "ALQR_OUTPUT_DIR";

/// Parses a JSON config. Relative side-information paths resolve against
/// `baseDir`. Throws InvalidConfig with the offending field named.
ExperimentConfig parseConfig(const std::string& text,
                             const std::filesystem::path& baseDir = {});
ExperimentConfig loadConfig(const std::filesystem::path& file);

/// Canonical JSON of the fully defaulted config (sorted keys).
std::string canonicalConfig(const ExperimentConfig& config);

/// FNV-1a of canonicalConfig, as 16 hex digits.
std::string configHash(const ExperimentConfig& config);

void validateConfig(const ExperimentConfig& config);

/// The side set a GCE run uses. TrueSupport reads the zero pattern of theta0
/// (experiment setup, like the initial estimate).
SideInformation resolveSide(const SideSpec& spec, const DynamicsParameter& theta0,
                            const CostSpec& cost);

/// Side-information file: {"kind": "support", "mask": [[...]]} or
/// {"kind": "subspace", "base": [[...]], "basis": [[[...]], ...]}.
SideInformation loadSideFile(const std::filesystem::path& file, Index p, Index q);

}  // namespace alqr

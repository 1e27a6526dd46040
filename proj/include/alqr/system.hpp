#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "alqr/model.hpp"
#include "alqr/policy.hpp"

namespace alqr {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive decorrelated seeds.
std::uint64_t splitmix64(std::uint64_t x);

Matrix standardGaussian(Index rows, Index cols, Rng& rng);

enum class NoiseKind { Gaussian, ScaledUniform };

struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  Matrix covariance;
  std::uint64_t seed = 0;
};

/// Seed-deterministic stream of zero-mean vectors with covariance C.
/// Scaled-uniform draws are F u with u_i ~ U(-sqrt3, sqrt3) and FF' = C.
class NoiseStream {
 public:
  explicit NoiseStream(const NoiseModel& model);

  Vector next();

  /// Largest |w_i| the scaled-uniform kind can produce, per coordinate.
  Vector uniformBound() const;

 private:
  NoiseKind kind_;
  Matrix factor_;
  Rng rng_;
  std::normal_distribution<double> normal_;
  std::uniform_real_distribution<double> uniform_;
};

std::vector<Vector> drawNoise(const NoiseModel& model, Index horizon);

/// FNV-1a over the raw bytes of a noise sequence; identifies the realization.
std::uint64_t noiseFingerprint(std::span<const Vector> noises);

inline constexpr double kDivergenceThreshold = 1e30;

struct Trajectory {
  std::vector<Vector> states;  ///< x(0..n)
  std::vector<Vector> inputs;  ///< u(0..n-1)
  std::vector<Vector> noises;  ///< w(1..n); noises[t] drives x(t+1)
  std::vector<double> costs;   ///< c_t for t = 0..n-1
  std::vector<Matrix> gains;   ///< L_t when every step came from a linear policy
  bool diverged = false;
  std::uint64_t noiseTag = 0;

  Index horizon() const { return static_cast<Index>(inputs.size()); }
  bool hasGains() const { return !gains.empty() && gains.size() == inputs.size(); }
};

Trajectory simulate(const DynamicsParameter& theta0, const CostSpec& cost, Policy& policy,
                    std::span<const Vector> noises, const Vector& x0);

inline Trajectory simulate(const DynamicsParameter& theta0, const CostSpec& cost, Policy& policy,
                           std::span<const Vector> noises) {
  return simulate(theta0, cost, policy, noises, Vector::Zero(theta0.stateDim()));
}

/// Runs `policy` and `optimal` on the same noise realization and x0.
std::pair<Trajectory, Trajectory> simulateCoupled(const DynamicsParameter& theta0,
                                                  const CostSpec& cost, Policy& policy,
                                                  Policy& optimal, std::span<const Vector> noises,
                                                  const Vector& x0);

/// Columns t, x_1..x_p, u_1..u_r, cost. The last row carries x(n) with empty
/// input and cost fields. With includeGains, columns L_i_j (row-major) follow.
void writeTrajectoryCsv(std::ostream& out, const Trajectory& traj, bool includeGains = false);

/// Reads the format above; dimensions come from the header. Noise is not stored in the file; pass theta0 to
/// reconstruct w(t+1) = x(t+1) - A0 x(t) - B0 u(t).
Trajectory readTrajectoryCsv(std::istream& in);
void reconstructNoise(Trajectory& traj, const DynamicsParameter& theta0);

}  // namespace alqr

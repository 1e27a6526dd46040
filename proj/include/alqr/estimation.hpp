#pragma once

#include <cstdint>
#include <vector>

#include "alqr/model.hpp"
#include "alqr/side_information.hpp"

namespace alqr {

/// Update times floor(gamma^m), m = 0, 1, ..., with repeats collapsed.
class EpisodeSchedule {
 public:
  explicit EpisodeSchedule(double gamma, std::int64_t limit = std::int64_t{1} << 40);

  double gamma() const { return gamma_; }
  /// Strictly increasing deduplicated update times.
  const std::vector<std::int64_t>& boundaries() const { return boundaries_; }
  bool isBoundary(std::int64_t n) const;

  struct Position {
    /// Largest m with floor(gamma^m) <= n; -1 before the first update.
    int exponent = -1;
    bool isBoundary = false;
  };
  Position episodeIndex(std::int64_t n) const;

 private:
  double gamma_;
  std::vector<std::int64_t> boundaries_;
  std::vector<int> lastExponent_;  // largest m mapping to each boundary
};

/// Sufficient statistics of the regression x(t+1) ~ theta z_t, z_t = [x(t); u(t)].
struct RegressorAccumulator {
  Matrix gram;   ///< sum z z'  (q x q)
  Matrix cross;  ///< sum x(t+1) z'  (p x q)
  std::int64_t count = 0;

  RegressorAccumulator() = default;
  RegressorAccumulator(Index stateDim, Index inputDim);

  void add(const Vector& x, const Vector& u, const Vector& xNext);
};

RegressorAccumulator accumulate(RegressorAccumulator acc, const Vector& x, const Vector& u,
                                const Vector& xNext);

struct Estimate {
  DynamicsParameter theta;
  double errorToTruth = -1.0;  ///< operator norm to the truth; diagnostics only
};

inline constexpr double kSingularGramCondition = 1e12;

/// cross * (gram + ridge I)^{-1}. With ridge == 0 a numerically singular gram
/// raises SingularGram.
Estimate leastSquares(const RegressorAccumulator& acc, double ridge = 0.0);

/// (cross + ridge anchor) (gram + ridge I)^{-1}: the ridge pulls toward
/// `anchor` instead of zero, so directions the data never excited keep the
/// anchor's values.
Estimate leastSquares(const RegressorAccumulator& acc, double ridge, const Matrix& anchor);

/// Exact minimizer of sum ||x(t+1) - theta z_t||^2 over an affine side set,
/// with an optional ridge on the free coordinates (toward the projection of
/// `anchor` when given, toward the set's base point otherwise).
Estimate constrainedLeastSquares(const RegressorAccumulator& acc, const SideInformation& side,
                                 double ridge = 0.0, const Matrix* anchor = nullptr);

Estimate withError(Estimate estimate, const DynamicsParameter& truth);

}  // namespace alqr

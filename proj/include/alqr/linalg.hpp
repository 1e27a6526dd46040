#pragma once

#include "alqr/model.hpp"

namespace alqr {

/// Eigenvalues within this distance of the unit circle count as unstable.
inline constexpr double kStabilityMargin = 1e-9;

struct SpectralReport {
  double radius = 0.0;
  bool isStable = true;
};

/// Largest eigenvalue magnitude via the real Schur form.
SpectralReport spectralRadius(const Matrix& m);

/// Largest singular value.
double operatorNorm(const Matrix& m);

/// Number of singular values above tol * sigma_max.
Index rank(const Matrix& m, double tol = 1e-9);

/// Orthonormal basis (as columns) of the null space of m, using the same
/// relative singular-value threshold as rank().
Matrix nullSpace(const Matrix& m, double tol = 1e-9);

bool isSymmetricPositiveDefinite(const Matrix& m, double symmetryTol = 1e-10);

Matrix symmetrized(const Matrix& m);

/// Solves K - d' K d = p0. Requires rho(d) < 1.
Matrix solveLyapunov(const Matrix& d, const Matrix& p0);

struct RiccatiOptions {
  double tolerance = 1e-12;
  int maxIterations = 100000;
  double divergenceCap = 1e12;
};

struct RiccatiSolution {
  Matrix k;  ///< stabilizing solution of the Riccati equation
  Matrix l;  ///< optimal gain -(B'KB + R)^{-1} B'KA
  int iterations = 0;
  double residual = 0.0;

  /// [I_p; L] stacked, so that theta * extendedFeedback() = A + B L.
  Matrix extendedFeedback() const;
};

/// Value iteration on the discrete algebraic Riccati equation from K = Q.
/// Throws NotStabilizable when the iteration diverges or its limit does not
/// stabilize (A, B), BadCost for non-PD Q or R.
RiccatiSolution solveRiccati(const DynamicsParameter& theta, const CostSpec& cost,
                             const RiccatiOptions& options = {});

/// Operator norm of K - Q - A'KA + A'KB(B'KB+R)^{-1}B'KA.
double riccatiResidual(const DynamicsParameter& theta, const CostSpec& cost, const Matrix& k);

Matrix optimalGain(const DynamicsParameter& theta, const CostSpec& cost, const Matrix& k);

}  // namespace alqr

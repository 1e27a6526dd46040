#include "alqr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "alqr/errors.hpp"

namespace alqr {

namespace {

void requireSquare(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::NonSquare, std::string(what) + " must be square");
  }
}

// Symmetric matrices only: operator norm is the largest |eigenvalue|.
double symmetricNorm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

SpectralReport spectralRadius(const Matrix& m) {
  requireSquare(m, "matrix");
  if (!m.allFinite()) {
    throw Error(ErrorCode::NoConvergence, "non-finite entries");
  }
  SpectralReport report;
  if (m.size() == 0) {
    return report;
  }
  Eigen::EigenSolver<Matrix> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "real Schur iteration did not converge");
  }
  report.radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  report.isStable = report.radius < 1.0 - kStabilityMargin;
  return report;
}

double operatorNorm(const Matrix& m) {
  if (m.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Index rank(const Matrix& m, double tol) {
  if (m.size() == 0) {
    return 0;
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) {
    return 0;
  }
  return (s.array() > tol * s(0)).count();
}

Matrix nullSpace(const Matrix& m, double tol) {
  const Index n = m.cols();
  if (m.rows() == 0) {
    return Matrix::Identity(n, n);
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Index r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    r = (s.array() > tol * s(0)).count();
  }
  return svd.matrixV().rightCols(n - r);
}

bool isSymmetricPositiveDefinite(const Matrix& m, double symmetryTol) {
  if (m.rows() != m.cols() || m.size() == 0 || !m.allFinite()) {
    return false;
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > symmetryTol * scale) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix solveLyapunov(const Matrix& d, const Matrix& p0) {
  requireSquare(d, "closed-loop matrix");
  requireSquare(p0, "right-hand side");
  if (d.rows() != p0.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "Lyapunov operands differ in size");
  }
  if (!spectralRadius(d).isStable) {
    throw Error(ErrorCode::UnstableInput, "rho(d) >= 1, the Lyapunov series diverges");
  }
  const Index p = d.rows();
  // vec(d' K d) = (d' kron d') vec(K) for column-major vec.
  const Matrix dt = d.transpose();
  Matrix op = Matrix::Identity(p * p, p * p);
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < p; ++j) {
      op.block(i * p, j * p, p, p) -= dt(i, j) * dt;
    }
  }
  const Vector rhs = Eigen::Map<const Vector>(p0.data(), p * p);
  const Vector sol = op.fullPivLu().solve(rhs);
  return symmetrized(Eigen::Map<const Matrix>(sol.data(), p, p));
}

Matrix RiccatiSolution::extendedFeedback() const {
  const Index p = l.cols();
  Matrix ext(p + l.rows(), p);
  ext << Matrix::Identity(p, p), l;
  return ext;
}

Matrix optimalGain(const DynamicsParameter& theta, const CostSpec& cost, const Matrix& k) {
  const Matrix btk = theta.b.transpose() * k;
  return -(btk * theta.b + cost.r).llt().solve(btk * theta.a);
}

double riccatiResidual(const DynamicsParameter& theta, const CostSpec& cost, const Matrix& k) {
  const Matrix& a = theta.a;
  const Matrix& b = theta.b;
  const Matrix btka = b.transpose() * k * a;
  const Matrix m = b.transpose() * k * b + cost.r;
  const Matrix res = k - cost.q - a.transpose() * k * a + btka.transpose() * m.llt().solve(btka);
  return operatorNorm(res);
}

RiccatiSolution solveRiccati(const DynamicsParameter& theta, const CostSpec& cost,
                             const RiccatiOptions& options) {
  validateDimensions(theta);
  validateCost(cost, theta);
  const Matrix& a = theta.a;
  const Matrix& b = theta.b;
  const Matrix at = a.transpose();

  RiccatiSolution sol;
  Matrix k = cost.q;
  bool converged = false;
  for (int it = 1; it <= options.maxIterations; ++it) {
    const Matrix btk = b.transpose() * k;
    const Matrix btka = btk * a;
    Matrix next = cost.q + at * k * a - btka.transpose() * (btk * b + cost.r).llt().solve(btka);
    next = symmetrized(next);
    if (!next.allFinite()) {
      throw Error(ErrorCode::NotStabilizable, "Riccati iteration produced non-finite values");
    }
    const double step = symmetricNorm(next - k);
    k = std::move(next);
    const double size = symmetricNorm(k);
    if (size > options.divergenceCap) {
      throw Error(ErrorCode::NotStabilizable, "Riccati iteration diverged");
    }
    sol.iterations = it;
    if (step < options.tolerance * std::max(1.0, size)) {
      converged = true;
      break;
    }
  }

  sol.k = std::move(k);
  sol.l = optimalGain(theta, cost, sol.k);
  sol.residual = riccatiResidual(theta, cost, sol.k);
  const double kNorm = symmetricNorm(sol.k);
  if (!converged && sol.residual > 1e-9 * (1.0 + kNorm)) {
    throw Error(ErrorCode::NotStabilizable, "Riccati iteration did not converge");
  }
  if (!spectralRadius(a + b * sol.l).isStable) {
    throw Error(ErrorCode::NotStabilizable, "Riccati gain does not stabilize (A, B)");
  }
  return sol;
}

}  // namespace alqr

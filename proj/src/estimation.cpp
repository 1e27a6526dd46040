#include "alqr/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Eigenvalues>

#include "alqr/errors.hpp"
#include "alqr/linalg.hpp"

namespace alqr {

EpisodeSchedule::EpisodeSchedule(double gamma, std::int64_t limit) : gamma_(gamma) {
  if (!(gamma > 1.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidConfig, "episode rate gamma must exceed 1");
  }
  for (int m = 0;; ++m) {
    const double value = std::floor(std::pow(gamma, m));
    if (value > static_cast<double>(limit)) break;
    const auto b = static_cast<std::int64_t>(value);
    if (!boundaries_.empty() && boundaries_.back() == b) {
      lastExponent_.back() = m;
    } else {
      boundaries_.push_back(b);
      lastExponent_.push_back(m);
    }
  }
}

bool EpisodeSchedule::isBoundary(std::int64_t n) const {
  return std::binary_search(boundaries_.begin(), boundaries_.end(), n);
}

EpisodeSchedule::Position EpisodeSchedule::episodeIndex(std::int64_t n) const {
  Position pos;
  const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), n);
  if (it == boundaries_.begin()) {
    return pos;
  }
  const auto idx = static_cast<std::size_t>(std::distance(boundaries_.begin(), it) - 1);
  pos.exponent = lastExponent_[idx];
  pos.isBoundary = boundaries_[idx] == n;
  return pos;
}

RegressorAccumulator::RegressorAccumulator(Index stateDim, Index inputDim)
    : gram(Matrix::Zero(stateDim + inputDim, stateDim + inputDim)),
      cross(Matrix::Zero(stateDim, stateDim + inputDim)) {}

void RegressorAccumulator::add(const Vector& x, const Vector& u, const Vector& xNext) {
  const Index p = x.size();
  if (u.size() + p != gram.rows() || xNext.size() != cross.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "sample does not match accumulator dimensions");
  }
  Vector z(p + u.size());
  z << x, u;
  gram.noalias() += z * z.transpose();
  cross.noalias() += xNext * z.transpose();
  ++count;
}

RegressorAccumulator accumulate(RegressorAccumulator acc, const Vector& x, const Vector& u,
                                const Vector& xNext) {
  acc.add(x, u, xNext);
  return acc;
}

namespace {

void checkConditioning(const Matrix& gram) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double hi = eig.eigenvalues().maxCoeff();
  const double lo = eig.eigenvalues().minCoeff();
  if (!(hi > 0.0) || lo <= hi / kSingularGramCondition) {
    throw Error(ErrorCode::SingularGram, "regressor Gram matrix is numerically singular");
  }
}

}  // namespace

Estimate leastSquares(const RegressorAccumulator& acc, double ridge) {
  return leastSquares(acc, ridge, Matrix::Zero(acc.cross.rows(), acc.cross.cols()));
}

Estimate leastSquares(const RegressorAccumulator& acc, double ridge, const Matrix& anchor) {
  if (anchor.rows() != acc.cross.rows() || anchor.cols() != acc.cross.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "ridge anchor must be p x q");
  }
  if (acc.count < 1 && ridge <= 0.0) {
    throw Error(ErrorCode::SingularGram, "no samples accumulated");
  }
  const Index q = acc.gram.rows();
  const Index p = acc.cross.rows();
  const Matrix g = acc.gram + ridge * Matrix::Identity(q, q);
  if (ridge <= 0.0) {
    checkConditioning(g);
  }
  // theta g = cross  <=>  g theta' = cross'
  const Matrix rhs = acc.cross + ridge * anchor;
  const Matrix theta = g.ldlt().solve(rhs.transpose()).transpose();
  return Estimate{DynamicsParameter::fromStacked(theta, p)};
}

Estimate constrainedLeastSquares(const RegressorAccumulator& acc, const SideInformation& side,
                                 double ridge, const Matrix* anchor) {
  const Index q = acc.gram.rows();
  const Index p = acc.cross.rows();
  if (side.rows() != p || side.cols() != q) {
    throw Error(ErrorCode::DimensionMismatch, "side information shape differs from p x q");
  }
  if (!side.isAffine()) {
    throw Error(ErrorCode::UnsupportedConstraint,
                "constrained least squares supports support and subspace sets only");
  }
  if (anchor != nullptr && (anchor->rows() != p || anchor->cols() != q)) {
    throw Error(ErrorCode::DimensionMismatch, "ridge anchor must be p x q");
  }

  if (side.kind() == SideKind::Support) {
    // Rows decouple: each row solves its own normal equations on its free columns.
    Matrix theta = Matrix::Zero(p, q);
    for (Index i = 0; i < p; ++i) {
      std::vector<Index> free;
      for (Index j = 0; j < q; ++j) {
        if (side.mask()(i, j) != 0.0) free.push_back(j);
      }
      if (free.empty()) continue;
      const auto k = static_cast<Index>(free.size());
      Matrix g(k, k);
      Vector c(k);
      for (Index a = 0; a < k; ++a) {
        const Index col = free[static_cast<std::size_t>(a)];
        c(a) = acc.cross(i, col) + (anchor != nullptr ? ridge * (*anchor)(i, col) : 0.0);
        for (Index b = 0; b < k; ++b) {
          g(a, b) = acc.gram(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }
      }
      g += ridge * Matrix::Identity(k, k);
      if (ridge <= 0.0) checkConditioning(g);
      const Vector row = g.ldlt().solve(c);
      for (Index a = 0; a < k; ++a) theta(i, free[static_cast<std::size_t>(a)]) = row(a);
    }
    return Estimate{DynamicsParameter::fromStacked(theta, p)};
  }

  // theta = base + sum c_i E_i; objective tr(theta G theta') - 2 tr(C theta') gives
  // H c = g with H_ij = tr(E_i G E_j'), g_i = tr((C - base G) E_i').
  const AffineSubspace set = side.asAffine();
  const Index k = set.dimension();
  if (k == 0) {
    return Estimate{DynamicsParameter::fromStacked(set.basePoint, p)};
  }
  std::vector<Matrix> eg;
  eg.reserve(static_cast<std::size_t>(k));
  for (const Matrix& e : set.basis) eg.push_back(e * acc.gram);
  Matrix h(k, k);
  Vector g(k);
  const Matrix residualCross = acc.cross - set.basePoint * acc.gram;
  for (Index i = 0; i < k; ++i) {
    const Matrix& ei = set.basis[static_cast<std::size_t>(i)];
    g(i) = (residualCross.array() * ei.array()).sum();
    if (anchor != nullptr) {
      g(i) += ridge * ((*anchor - set.basePoint).array() * ei.array()).sum();
    }
    for (Index j = 0; j < k; ++j) {
      h(i, j) = (eg[static_cast<std::size_t>(i)].array() *
                 set.basis[static_cast<std::size_t>(j)].array()).sum();
    }
  }
  h = symmetrized(h) + ridge * Matrix::Identity(k, k);
  if (ridge <= 0.0) checkConditioning(h);
  const Vector coeffs = h.ldlt().solve(g);
  return Estimate{DynamicsParameter::fromStacked(set.point(coeffs), p)};
}

Estimate withError(Estimate estimate, const DynamicsParameter& truth) {
  estimate.errorToTruth = operatorNorm(estimate.theta.stacked() - truth.stacked());
  return estimate;
}

}  // namespace alqr

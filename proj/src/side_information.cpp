#include "alqr/side_information.hpp"

#include <cmath>

#include "alqr/errors.hpp"
#include "alqr/linalg.hpp"

namespace alqr {

namespace {

double traceInner(const Matrix& x, const Matrix& y) { return (x.array() * y.array()).sum(); }

}  // namespace

Matrix AffineSubspace::point(const Vector& coefficients) const {
  if (coefficients.size() != dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "coefficient count differs from subspace dimension");
  }
  Matrix out = basePoint;
  for (Index i = 0; i < dimension(); ++i) {
    out += coefficients(i) * basis[static_cast<std::size_t>(i)];
  }
  return out;
}

Matrix AffineSubspace::project(const Matrix& theta) const {
  const Matrix offset = theta - basePoint;
  Matrix out = basePoint;
  for (const Matrix& e : basis) {
    out += traceInner(offset, e) * e;
  }
  return out;
}

double AffineSubspace::orthonormalityError() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(traceInner(basis[i], basis[j]) - target));
    }
  }
  return worst;
}

std::vector<Matrix> orthonormalize(const std::vector<Matrix>& directions, double tol) {
  std::vector<Matrix> out;
  for (const Matrix& d : directions) {
    const double original = d.norm();
    if (original == 0.0) continue;
    Matrix v = d;
    // Two passes of modified Gram-Schmidt keep orthogonality near eps.
    for (int pass = 0; pass < 2; ++pass) {
      for (const Matrix& e : out) {
        v -= traceInner(v, e) * e;
      }
    }
    const double n = v.norm();
    if (n > tol * original) {
      out.push_back(v / n);
    }
  }
  return out;
}

std::vector<Matrix> orthogonalComplement(const std::vector<Matrix>& constraints, Index rows,
                                         Index cols) {
  const Index dim = rows * cols;
  Matrix stacked(static_cast<Index>(constraints.size()), dim);
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const Matrix& c = constraints[i];
    if (c.rows() != rows || c.cols() != cols) {
      throw Error(ErrorCode::DimensionMismatch, "constraint matrix has the wrong shape");
    }
    stacked.row(static_cast<Index>(i)) = Eigen::Map<const Vector>(c.data(), dim).transpose();
  }
  const Matrix kernel = nullSpace(stacked);
  std::vector<Matrix> basis;
  for (Index j = 0; j < kernel.cols(); ++j) {
    basis.emplace_back(Eigen::Map<const Matrix>(kernel.col(j).data(), rows, cols));
  }
  return basis;
}

SideInformation SideInformation::support(const Matrix& mask) {
  SideInformation side;
  side.kind_ = SideKind::Support;
  side.rows_ = mask.rows();
  side.cols_ = mask.cols();
  side.mask_ = (mask.array() != 0.0).cast<double>().matrix();
  return side;
}

SideInformation SideInformation::unconstrained(Index p, Index q) {
  return support(Matrix::Ones(p, q));
}

SideInformation SideInformation::supportOf(const Matrix& theta, double tol) {
  return support((theta.array().abs() > tol).cast<double>().matrix());
}

SideInformation SideInformation::subspace(AffineSubspace set) {
  if (set.orthonormalityError() > 1e-10) {
    throw Error(ErrorCode::InvalidConfig, "subspace basis is not trace-orthonormal");
  }
  for (const Matrix& e : set.basis) {
    if (e.rows() != set.basePoint.rows() || e.cols() != set.basePoint.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "subspace basis element has the wrong shape");
    }
  }
  SideInformation side;
  side.kind_ = SideKind::Subspace;
  side.rows_ = set.basePoint.rows();
  side.cols_ = set.basePoint.cols();
  side.affine_ = std::move(set);
  return side;
}

SideInformation SideInformation::singleton(const Matrix& theta) {
  return subspace(AffineSubspace{theta, {}});
}

SideInformation SideInformation::sparsityBudget(Index p, Index q, Index maxNonzeros) {
  if (maxNonzeros < 0 || maxNonzeros > p * q) {
    throw Error(ErrorCode::InvalidConfig, "sparsity budget out of range");
  }
  SideInformation side;
  side.kind_ = SideKind::SparsityBudget;
  side.rows_ = p;
  side.cols_ = q;
  side.budget_ = maxNonzeros;
  return side;
}

SideInformation SideInformation::rankBudget(Index p, Index q, Index maxRank) {
  if (maxRank < 0 || maxRank > std::min(p, q)) {
    throw Error(ErrorCode::InvalidConfig, "rank budget out of range");
  }
  SideInformation side;
  side.kind_ = SideKind::RankBudget;
  side.rows_ = p;
  side.cols_ = q;
  side.budget_ = maxRank;
  return side;
}

AffineSubspace SideInformation::asAffine() const {
  switch (kind_) {
    case SideKind::Support: {
      AffineSubspace set{Matrix::Zero(rows_, cols_), {}};
      for (Index i = 0; i < rows_; ++i) {
        for (Index j = 0; j < cols_; ++j) {
          if (mask_(i, j) != 0.0) {
            Matrix e = Matrix::Zero(rows_, cols_);
            e(i, j) = 1.0;
            set.basis.push_back(std::move(e));
          }
        }
      }
      return set;
    }
    case SideKind::Subspace:
      return affine_;
    default:
      throw Error(ErrorCode::UnsupportedConstraint,
                  "budget constraint sets are nonconvex; only membership is available");
  }
}

bool SideInformation::contains(const Matrix& theta, double tol) const {
  if (theta.rows() != rows_ || theta.cols() != cols_) {
    return false;
  }
  switch (kind_) {
    case SideKind::Support:
      return ((mask_.array() == 0.0).cast<double>() * theta.array().abs()).maxCoeff() <= tol;
    case SideKind::Subspace:
      return (theta - affine_.project(theta)).norm() <= tol * std::max(1.0, theta.norm());
    case SideKind::SparsityBudget:
      return (theta.array().abs() > tol).count() <= budget_;
    case SideKind::RankBudget:
      return rank(theta, tol) <= budget_;
  }
  return false;
}

Index SideInformation::dimension() const {
  switch (kind_) {
    case SideKind::Support:
      return static_cast<Index>((mask_.array() != 0.0).count());
    case SideKind::Subspace:
      return affine_.dimension();
    case SideKind::SparsityBudget:
      return budget_;
    case SideKind::RankBudget:
      return budget_ * (rows_ + cols_ - budget_);
  }
  return 0;
}

}  // namespace alqr

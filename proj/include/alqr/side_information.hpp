#pragma once

#include <optional>
#include <vector>

#include "alqr/model.hpp"

namespace alqr {

/// basePoint + span(basis); basis elements are p x q and mutually
/// orthonormal under the trace inner product tr(X'Y).
struct AffineSubspace {
  Matrix basePoint;
  std::vector<Matrix> basis;

  Index dimension() const { return static_cast<Index>(basis.size()); }
  Matrix point(const Vector& coefficients) const;
  /// Frobenius-orthogonal projection onto the affine set.
  Matrix project(const Matrix& theta) const;
  /// Largest deviation from trace-orthonormality.
  double orthonormalityError() const;
};

/// Gram-Schmidt under the trace inner product; drops directions whose
/// residual falls below tol relative to their original norm.
std::vector<Matrix> orthonormalize(const std::vector<Matrix>& directions, double tol = 1e-9);

/// Orthonormal basis of the trace-orthogonal complement of span(constraints)
/// inside R^{rows x cols}.
std::vector<Matrix> orthogonalComplement(const std::vector<Matrix>& constraints, Index rows,
                                         Index cols);

enum class SideKind { Support, Subspace, SparsityBudget, RankBudget };

/// A constraint set Theta_0 containing the true parameter.
class SideInformation {
 public:
  /// mask(i, j) != 0 marks entries allowed to be nonzero.
  static SideInformation support(const Matrix& mask);
  static SideInformation unconstrained(Index p, Index q);
  static SideInformation subspace(AffineSubspace set);
  static SideInformation singleton(const Matrix& theta);
  static SideInformation sparsityBudget(Index p, Index q, Index maxNonzeros);
  static SideInformation rankBudget(Index p, Index q, Index maxRank);
  /// Support of theta's nonzero entries.
  static SideInformation supportOf(const Matrix& theta, double tol = 0.0);

  SideKind kind() const { return kind_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Matrix& mask() const { return mask_; }
  const AffineSubspace& affine() const { return affine_; }
  Index budget() const { return budget_; }

  /// Support and subspace kinds are affine sets that admit exact projection
  /// and sampling; the budget kinds only answer membership.
  bool isAffine() const { return kind_ == SideKind::Support || kind_ == SideKind::Subspace; }

  /// The set as basePoint + span(basis). Throws UnsupportedConstraint for
  /// budget kinds.
  AffineSubspace asAffine() const;

  bool contains(const Matrix& theta, double tol = 1e-10) const;

  Index dimension() const;

 private:
  SideKind kind_ = SideKind::Support;
  Index rows_ = 0;
  Index cols_ = 0;
  Matrix mask_;
  AffineSubspace affine_;
  Index budget_ = 0;
};

}  // namespace alqr

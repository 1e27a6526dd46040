#pragma once

#include <Eigen/Dense>

namespace alqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// theta = [A, B] with A p x p and B p x r.
struct DynamicsParameter {
  Matrix a;
  Matrix b;

  DynamicsParameter() = default;
  DynamicsParameter(Matrix a_, Matrix b_);

  /// Splits a p x (p + r) stacked matrix.
  static DynamicsParameter fromStacked(const Matrix& theta, Index stateDim);

  Index stateDim() const { return a.rows(); }
  Index inputDim() const { return b.cols(); }
  Index regressorDim() const { return a.rows() + b.cols(); }

  Matrix stacked() const;
};

/// Quadratic stage cost x'Qx + u'Ru.
struct CostSpec {
  Matrix q;
  Matrix r;
};

/// Throws BadCost unless Q and R are symmetric positive definite and sized
/// consistently with theta.
void validateCost(const CostSpec& cost, const DynamicsParameter& theta);

void validateDimensions(const DynamicsParameter& theta);

}  // namespace alqr

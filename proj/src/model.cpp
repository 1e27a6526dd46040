#include "alqr/model.hpp"

#include "alqr/errors.hpp"
#include "alqr/linalg.hpp"

namespace alqr {

std::string_view toString(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::UnstableInput: return "UnstableInput";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::BadCost: return "BadCost";
    case ErrorCode::BadCovariance: return "BadCovariance";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::UnsupportedConstraint: return "UnsupportedConstraint";
    case ErrorCode::MismatchedTrajectories: return "MismatchedTrajectories";
    case ErrorCode::MissingGains: return "MissingGains";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

DynamicsParameter::DynamicsParameter(Matrix a_, Matrix b_) : a(std::move(a_)), b(std::move(b_)) {
  validateDimensions(*this);
}

DynamicsParameter DynamicsParameter::fromStacked(const Matrix& theta, Index stateDim) {
  if (theta.rows() != stateDim || theta.cols() <= stateDim) {
    throw Error(ErrorCode::DimensionMismatch, "stacked parameter must be p x (p + r) with r >= 1");
  }
  return DynamicsParameter(theta.leftCols(stateDim), theta.rightCols(theta.cols() - stateDim));
}

Matrix DynamicsParameter::stacked() const {
  Matrix theta(a.rows(), a.cols() + b.cols());
  theta << a, b;
  return theta;
}

void validateDimensions(const DynamicsParameter& theta) {
  if (theta.a.rows() != theta.a.cols()) {
    throw Error(ErrorCode::NonSquare, "transition matrix A must be square");
  }
  if (theta.b.rows() != theta.a.rows() || theta.b.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "input matrix B must have p rows and r >= 1 columns");
  }
  if (!theta.a.allFinite() || !theta.b.allFinite()) {
    throw Error(ErrorCode::DimensionMismatch, "dynamics parameter has non-finite entries");
  }
}

void validateCost(const CostSpec& cost, const DynamicsParameter& theta) {
  if (cost.q.rows() != theta.stateDim() || cost.q.cols() != theta.stateDim() ||
      cost.r.rows() != theta.inputDim() || cost.r.cols() != theta.inputDim()) {
    throw Error(ErrorCode::BadCost, "Q must be p x p and R must be r x r");
  }
  if (!isSymmetricPositiveDefinite(cost.q)) {
    throw Error(ErrorCode::BadCost, "Q is not symmetric positive definite");
  }
  if (!isSymmetricPositiveDefinite(cost.r)) {
    throw Error(ErrorCode::BadCost, "R is not symmetric positive definite");
  }
}

}  // namespace alqr

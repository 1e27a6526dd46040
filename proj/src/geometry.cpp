#include "alqr/geometry.hpp"

#include <cmath>
#include <limits>

#include "alqr/errors.hpp"
#include "alqr/system.hpp"

namespace alqr {

namespace {

// theta-space direction [-Y L0, Y] for an input-matrix offset Y.
Matrix directionFromInputOffset(const Matrix& y, const Matrix& gain) {
  Matrix d(y.rows(), y.rows() + y.cols());
  d << -y * gain, y;
  return d;
}

Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix randomDirection(const std::vector<Matrix>& basis, Index p, Index q, Rng& rng) {
  Matrix d = Matrix::Zero(p, q);
  const Matrix coeffs = standardGaussian(static_cast<Index>(basis.size()), 1, rng);
  for (std::size_t i = 0; i < basis.size(); ++i) d += coeffs(static_cast<Index>(i), 0) * basis[i];
  return d;
}

}  // namespace

Matrix extendedFeedback(const Matrix& gain) {
  const Index p = gain.cols();
  Matrix ext(p + gain.rows(), p);
  ext << Matrix::Identity(p, p), gain;
  return ext;
}

Matrix closedLoop(const DynamicsParameter& theta, const DynamicsParameter& feedbackOwner,
                  const CostSpec& cost) {
  const RiccatiSolution sol = solveRiccati(feedbackOwner, cost);
  return theta.stacked() * sol.extendedFeedback();
}

AffineSubspace constructP0(const DynamicsParameter& theta0, const CostSpec& cost) {
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Matrix d0 = theta0.a + theta0.b * sol.l;
  // D0' K (B - B0) = 0: every column of B - B0 is orthogonal to range(K D0).
  const Matrix v = nullSpace((sol.k * d0).transpose());
  const Index p = theta0.stateDim();
  const Index r = theta0.inputDim();
  std::vector<Matrix> directions;
  for (Index i = 0; i < v.cols(); ++i) {
    for (Index j = 0; j < r; ++j) {
      Matrix y = Matrix::Zero(p, r);
      y.col(j) = v.col(i);
      directions.push_back(directionFromInputOffset(y, sol.l));
    }
  }
  return AffineSubspace{theta0.stacked(), orthonormalize(directions)};
}

std::vector<Matrix> nullSpaceDirections(const DynamicsParameter& theta0, const CostSpec& cost) {
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Index p = theta0.stateDim();
  const Index r = theta0.inputDim();
  std::vector<Matrix> directions;
  for (Index i = 0; i < p; ++i) {
    for (Index j = 0; j < r; ++j) {
      Matrix y = Matrix::Zero(p, r);
      y(i, j) = 1.0;
      directions.push_back(directionFromInputOffset(y, sol.l));
    }
  }
  return orthonormalize(directions);
}

MembershipReport verifyP0Membership(const DynamicsParameter& theta,
                                    const DynamicsParameter& theta0, const CostSpec& cost) {
  const RiccatiSolution truth = solveRiccati(theta0, cost);
  const RiccatiSolution other = solveRiccati(theta, cost);
  const Matrix ext0 = truth.extendedFeedback();
  MembershipReport report;
  report.feedbackGap = operatorNorm(other.l - truth.l);
  report.closedLoopGap = operatorNorm(theta.stacked() * ext0 - theta0.stacked() * ext0);
  report.riccatiGap = operatorNorm(other.k - truth.k);
  report.sameFeedback = report.feedbackGap <= 1e-6;
  report.sameClosedLoop = report.closedLoopGap <= 1e-8;
  return report;
}

bool unfalsifiableTest(const DynamicsParameter& theta, const DynamicsParameter& theta0,
                       const CostSpec& cost) {
  const Matrix ext = solveRiccati(theta, cost).extendedFeedback();
  return operatorNorm((theta0.stacked() - theta.stacked()) * ext) <= 1e-8;
}

TangentReport tangentDimension(const DynamicsParameter& theta0, const CostSpec& cost,
                               Index probeCount, std::uint64_t seed) {
  const Index p = theta0.stateDim();
  const Index r = theta0.inputDim();
  const Index q = p + r;
  if (probeCount < p * q) {
    throw Error(ErrorCode::InvalidConfig, "tangentDimension needs at least pq probes");
  }
  const RiccatiSolution sol = solveRiccati(theta0, cost);
  const Matrix& k = sol.k;
  const Matrix& b0 = theta0.b;
  const Matrix d0 = theta0.a + b0 * sol.l;

  const auto apply = [&](const Matrix& probe) -> Matrix {
    const Matrix m = probe.leftCols(p);
    const Matrix n = probe.rightCols(r);
    const Matrix z = k * (m + n * sol.l);
    const Matrix delta = solveLyapunov(d0, d0.transpose() * z + z.transpose() * d0);
    return b0.transpose() * z + (n.transpose() * k + b0.transpose() * delta) * d0;
  };

  Matrix unitImages(r * p, p * q);
  Matrix images(r * p, probeCount);
  Rng rng(seed);
  for (Index c = 0; c < probeCount; ++c) {
    Matrix probe;
    if (c < p * q) {
      probe = Matrix::Zero(p, q);
      probe(c % p, c / p) = 1.0;  // column-major unit directions
    } else {
      probe = standardGaussian(p, q, rng);
    }
    images.col(c) = vec(apply(probe));
    if (c < p * q) unitImages.col(c) = images.col(c);
  }

  TangentReport report;
  report.operatorRank = rank(images);
  report.dimension = p * q - report.operatorRank;
  report.expected = p * p + (p - rank(theta0.a)) * (r - rank(theta0.b));
  const Matrix kernel = nullSpace(unitImages);
  for (Index c = 0; c < kernel.cols(); ++c) {
    report.kernel.emplace_back(Eigen::Map<const Matrix>(kernel.col(c).data(), p, q));
  }
  return report;
}

Matrix feedbackDirectionalDerivative(const DynamicsParameter& theta0, const CostSpec& cost,
                                     const Matrix& direction, double step) {
  const Index p = theta0.stateDim();
  const Matrix base = theta0.stacked();
  const Matrix plus =
      solveRiccati(DynamicsParameter::fromStacked(base + step * direction, p), cost).l;
  const Matrix minus =
      solveRiccati(DynamicsParameter::fromStacked(base - step * direction, p), cost).l;
  return (plus - minus) / (2.0 * step);
}

IdentifiabilityReport identifiabilityCheck(const SideInformation& side,
                                           const DynamicsParameter& theta0, const CostSpec& cost,
                                           Index sampleCount, double radius, std::uint64_t seed) {
  if (!side.isAffine()) {
    throw Error(ErrorCode::UnsupportedConstraint,
                "identifiability sampling needs a support or subspace set");
  }
  const Index p = theta0.stateDim();
  const Index q = theta0.regressorDim();
  const Matrix truth = theta0.stacked();
  const std::vector<Matrix> basis = side.asAffine().basis;
  const RiccatiSolution sol0 = solveRiccati(theta0, cost);
  constexpr double kNumeratorFloor = 1e-9;
  constexpr double kDenominatorFloor = 1e-12;
  constexpr double kUnboundedRatio = 1e6;

  IdentifiabilityReport report;
  bool violated = false;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto nearby = [&]() -> Matrix {
    if (basis.empty()) return truth;
    const Matrix d = randomDirection(basis, p, q, rng);
    const double n = operatorNorm(d);
    return n == 0.0 ? truth : Matrix(truth + radius * (1.0 - unit(rng)) * d / n);
  };
  const auto gainOf = [&](const Matrix& theta) -> std::optional<RiccatiSolution> {
    try {
      return solveRiccati(DynamicsParameter::fromStacked(theta, p), cost);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotStabilizable) throw;
      return std::nullopt;
    }
  };
  const auto score = [&](const Matrix& theta2, const Matrix& gain2, const Matrix& ext1,
                         bool& flag) {
    const double num = operatorNorm(gain2 - sol0.l);
    const double den = operatorNorm((theta2 - truth) * ext1);
    if (num <= kNumeratorFloor) return;
    if (den <= kDenominatorFloor) {
      flag = true;
      return;
    }
    if (&flag == &violated) report.estimatedConstant = std::max(report.estimatedConstant, num / den);
  };

  std::vector<Matrix> anchors{truth};
  for (Index s = 0; s < sampleCount; ++s) {
    const Matrix theta1 = nearby();
    const Matrix theta2 = nearby();
    const auto sol1 = gainOf(theta1);
    const auto sol2 = gainOf(theta2);
    if (!sol1 || !sol2) {
      ++report.skipped;
      continue;
    }
    ++report.samples;
    score(theta2, sol2->l, sol1->extendedFeedback(), violated);
    if (anchors.size() < 10) anchors.push_back(theta1);
  }

  // Side-set directions invisible to the closed loop under L(theta1). At
  // theta1 = theta0 these are the N(theta0) \ P0 constructions; at other
  // anchors they only feed offTruthKernelViolation.
  for (const Matrix& theta1 : anchors) {
    const bool atTruth = &theta1 == &anchors.front();
    if (basis.empty()) break;
    const auto sol1 = gainOf(theta1);
    if (!sol1) continue;
    const Matrix ext1 = sol1->extendedFeedback();
    Matrix map(p * p, static_cast<Index>(basis.size()));
    for (std::size_t i = 0; i < basis.size(); ++i) {
      map.col(static_cast<Index>(i)) = vec(basis[i] * ext1);
    }
    const Matrix kernel = nullSpace(map);
    for (Index c = 0; c < kernel.cols(); ++c) {
      Matrix d = Matrix::Zero(p, q);
      for (std::size_t i = 0; i < basis.size(); ++i) d += kernel(static_cast<Index>(i), c) * basis[i];
      const Matrix theta2 = truth + 0.5 * radius * d / operatorNorm(d);
      const auto sol2 = gainOf(theta2);
      if (!sol2) continue;
      ++report.targetedProbes;
      score(theta2, sol2->l, ext1, atTruth ? violated : report.offTruthKernelViolation);
    }
  }

  if (violated || report.estimatedConstant > kUnboundedRatio) {
    report.holds = false;
    report.estimatedConstant = std::numeric_limits<double>::infinity();
  } else {
    report.holds = true;
  }
  return report;
}

SubspaceConstraints identifiableSubspace(const DynamicsParameter& theta0, const CostSpec& cost) {
  const Index p = theta0.stateDim();
  const Index q = theta0.regressorDim();
  const AffineSubspace p0 = constructP0(theta0, cost);
  // Null-space directions with the P0 directions listed first; Gram-Schmidt
  // then leaves exactly the complement of P0 inside N(theta0).
  std::vector<Matrix> ordered = p0.basis;
  const std::vector<Matrix> nullDirs = nullSpaceDirections(theta0, cost);
  ordered.insert(ordered.end(), nullDirs.begin(), nullDirs.end());
  const std::vector<Matrix> all = orthonormalize(ordered);
  std::vector<Matrix> constraints(all.begin() + static_cast<std::ptrdiff_t>(p0.basis.size()),
                                  all.end());
  AffineSubspace set{theta0.stacked(), orthogonalComplement(constraints, p, q)};
  return SubspaceConstraints{SideInformation::subspace(std::move(set)), std::move(constraints)};
}

bool satisfiesDimensionBound(const SideInformation& side, const DynamicsParameter& theta0) {
  const Index p = theta0.stateDim();
  const Index q = theta0.regressorDim();
  return side.dimension() <= p * q - rank(theta0.a) * theta0.inputDim();
}

LipschitzReport lipschitzDiagnostic(const DynamicsParameter& theta0, const CostSpec& cost,
                                    double radius, Index sampleCount, std::uint64_t seed) {
  const Index p = theta0.stateDim();
  const Matrix truth = theta0.stacked();
  const Matrix l0 = solveRiccati(theta0, cost).l;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LipschitzReport report;
  for (Index s = 0; s < sampleCount; ++s) {
    const Matrix g = standardGaussian(truth.rows(), truth.cols(), rng);
    const Matrix offset = radius * (1.0 - unit(rng)) * g / operatorNorm(g);
    try {
      const Matrix l = solveRiccati(DynamicsParameter::fromStacked(truth + offset, p), cost).l;
      report.maxRatio = std::max(report.maxRatio, operatorNorm(l - l0) / operatorNorm(offset));
      ++report.samples;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotStabilizable) throw;
      ++report.skipped;
    }
  }
  return report;
}

}  // namespace alqr

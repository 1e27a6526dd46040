#pragma once

#include <cstdint>
#include <vector>

#include "alqr/linalg.hpp"
#include "alqr/model.hpp"
#include "alqr/side_information.hpp"

namespace alqr {

/// [I_p; L] stacked (q x p).
Matrix extendedFeedback(const Matrix& gain);

/// theta * [I; L(feedbackOwner)]: the closed loop when the optimal gain of
/// feedbackOwner is applied to a system with parameter theta.
Matrix closedLoop(const DynamicsParameter& theta, const DynamicsParameter& feedbackOwner,
                  const CostSpec& cost);

/// The asymptotic uncertainty set: parameters sharing both the optimal gain
/// and the optimal closed loop of theta0. Dimension (p - rank A0) r.
AffineSubspace constructP0(const DynamicsParameter& theta0, const CostSpec& cost);

/// Directions delta with delta [I; L(theta0)] = 0, i.e. the linear part of
/// the shifted null space N(theta0). Dimension p r.
std::vector<Matrix> nullSpaceDirections(const DynamicsParameter& theta0, const CostSpec& cost);

struct MembershipReport {
  bool sameFeedback = false;    ///< ||L(theta) - L(theta0)|| <= 1e-6
  bool sameClosedLoop = false;  ///< ||theta L~(theta0) - theta0 L~(theta0)|| <= 1e-8
  double feedbackGap = 0.0;
  double closedLoopGap = 0.0;
  double riccatiGap = 0.0;  ///< ||K(theta) - K(theta0)||
};

MembershipReport verifyP0Membership(const DynamicsParameter& theta,
                                    const DynamicsParameter& theta0, const CostSpec& cost);

/// True iff theta0 [I; L(theta)] equals theta [I; L(theta)] to 1e-8, i.e. the
/// closed loop theta predicts under its own gain cannot be told apart from the
/// true one.
bool unfalsifiableTest(const DynamicsParameter& theta, const DynamicsParameter& theta0,
                       const CostSpec& cost);

struct TangentReport {
  Index dimension = 0;      ///< pq - rank of the tangent operator
  Index operatorRank = 0;
  Index expected = 0;       ///< p^2 + (p - rank A0)(r - rank B0)
  std::vector<Matrix> kernel;  ///< orthonormal p x q tangent directions
};

/// Assembles the linear map [M, N] -> B0'Z + (N'K + B0'Delta) D0, where
/// Z = K (M + N L0) and Delta - D0' Delta D0 = D0'Z + Z'D0, by applying it to
/// probeCount directions (the pq unit directions first, then seeded random
/// ones), and returns the dimension of its kernel.
TangentReport tangentDimension(const DynamicsParameter& theta0, const CostSpec& cost,
                               Index probeCount, std::uint64_t seed = 7);

/// Central finite-difference derivative of L(theta) along a p x q direction.
Matrix feedbackDirectionalDerivative(const DynamicsParameter& theta0, const CostSpec& cost,
                                     const Matrix& direction, double step = 1e-6);

struct IdentifiabilityReport {
  bool holds = false;
  double estimatedConstant = 0.0;  ///< largest observed ratio; +inf on violation
  Index samples = 0;
  Index targetedProbes = 0;
  Index skipped = 0;  ///< non-stabilizable draws
  /// Some theta1 != theta0 in the side set admits a direction d with
  /// d L~(theta1) = 0 that still moves the optimal gain. Reported, not folded
  /// into `holds`.
  bool offTruthKernelViolation = false;
};

/// Empirical check of ||L(t2) - L(t0)|| <= l0 ||(t2 - t0) L~(t1)|| over pairs
/// t1, t2 sampled in the side set within `radius` of theta0, plus targeted
/// probes t1 = t0, t2 = t0 + d with d in the side set and d L~(t0) = 0.
/// Throws UnsupportedConstraint for budget kinds.
IdentifiabilityReport identifiabilityCheck(const SideInformation& side,
                                           const DynamicsParameter& theta0, const CostSpec& cost,
                                           Index sampleCount, double radius = 0.1,
                                           std::uint64_t seed = 11);

/// Case (v) side information: Theta_0 = {theta0 + d : tr(d' c_i) = 0} where
/// c_i span the rank(A0) r null-space directions orthogonal to P0.
struct SubspaceConstraints {
  SideInformation side;
  std::vector<Matrix> constraints;
};
SubspaceConstraints identifiableSubspace(const DynamicsParameter& theta0, const CostSpec& cost);

/// Necessary size condition for identifiability: dim Theta_0 <= pq - rank(A0) r.
bool satisfiesDimensionBound(const SideInformation& side, const DynamicsParameter& theta0);

struct LipschitzReport {
  double maxRatio = 0.0;  ///< max ||L(theta) - L(theta0)|| / ||theta - theta0||
  Index samples = 0;
  Index skipped = 0;
};

LipschitzReport lipschitzDiagnostic(const DynamicsParameter& theta0, const CostSpec& cost,
                                    double radius, Index sampleCount, std::uint64_t seed = 5);

}  // namespace alqr

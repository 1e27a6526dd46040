#include "alqr/policies.hpp"

#include <cmath>
#include <Eigen/Cholesky>

#include "alqr/errors.hpp"

namespace alqr {

LinearFeedbackPolicy::LinearFeedbackPolicy(Matrix gain, std::string label)
    : gain_(std::move(gain)), label_(std::move(label)) {}

Action LinearFeedbackPolicy::act(const History& history) {
  return Action{gain_ * history.current(), gain_};
}

std::unique_ptr<LinearFeedbackPolicy> optimalPolicy(const DynamicsParameter& theta0,
                                                    const CostSpec& cost) {
  return std::make_unique<LinearFeedbackPolicy>(solveRiccati(theta0, cost).l, "optimal");
}

EpisodicPolicy::EpisodicPolicy(EpisodeSchedule schedule, DynamicsParameter initialEstimate,
                               CostSpec cost, std::uint64_t seed)
    : schedule_(std::move(schedule)),
      cost_(std::move(cost)),
      estimate_(std::move(initialEstimate)),
      acc_(estimate_.stateDim(), estimate_.inputDim()),
      rng_(seed) {
  gain_ = solveRiccati(estimate_, cost_).l;
}

Action EpisodicPolicy::act(const History& history) {
  while (consumed_ < history.inputs.size()) {
    acc_.add(history.states[consumed_], history.inputs[consumed_], history.states[consumed_ + 1]);
    ++consumed_;
  }
  const std::int64_t t = history.time();
  if (t >= 1 && t != lastUpdate_ && schedule_.isBoundary(t)) {
    update(t);
    lastUpdate_ = t;
  }
  return Action{gain_ * history.current(), gain_};
}

void EpisodicPolicy::update(std::int64_t n) {
  UpdateRecord record;
  record.n = n;
  record.center = fitCenter(n);
  const Index p = stateDim();
  for (int attempt = 1; attempt <= kMaxRedraws; ++attempt) {
    record.attempts = attempt;
    Matrix perturbation = drawPerturbation(n, record.center);
    const Matrix candidate = record.center + perturbation;
    if (candidate.allFinite()) {
      try {
        const DynamicsParameter theta = DynamicsParameter::fromStacked(candidate, p);
        const RiccatiSolution sol = solveRiccati(theta, cost_);
        estimate_ = theta;
        gain_ = sol.l;
        record.perturbation = std::move(perturbation);
        record.accepted = true;
        break;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NotStabilizable) throw;
      }
    }
    if (!randomized()) break;
  }
  if (!record.accepted) {
    ++exhausted_;
  }
  updates_.push_back(std::move(record));
}

double rcePerturbationScale(std::int64_t n) {
  const double m = static_cast<double>(std::max<std::int64_t>(n, 2));
  return std::pow(m, -0.25) * std::pow(std::log(m), 0.25);
}

RcePolicy::RcePolicy(EpisodeSchedule schedule, double sigma0, DynamicsParameter initialEstimate,
                     CostSpec cost, std::uint64_t seed, double ridge)
    : EpisodicPolicy(std::move(schedule), std::move(initialEstimate), std::move(cost), seed),
      sigma0_(sigma0),
      ridge_(ridge),
      priorMean_(estimate().stacked()) {
  if (!(sigma0 >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sigma0 must be nonnegative");
  }
}

Matrix RcePolicy::fitCenter(std::int64_t) {
  return leastSquares(accumulator(), ridge_, priorMean_).theta.stacked();
}

Matrix RcePolicy::drawPerturbation(std::int64_t n, const Matrix& center) {
  if (sigma0_ == 0.0) {
    return Matrix::Zero(center.rows(), center.cols());
  }
  return rcePerturbationScale(n) * sigma0_ * standardGaussian(center.rows(), center.cols(), rng());
}

Matrix samplePosterior(const Matrix& mean, const Matrix& precision, Rng& rng) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularGram, "posterior precision is not positive definite");
  }
  // With precision = U'U (U upper), U^{-1} xi has covariance precision^{-1}.
  const Matrix xi = standardGaussian(mean.cols(), mean.rows(), rng);
  const Matrix draws = llt.matrixU().solve(xi);
  return mean + draws.transpose();
}

TsPolicy::TsPolicy(EpisodeSchedule schedule, Matrix priorPrecision,
                   DynamicsParameter initialEstimate, CostSpec cost, std::uint64_t seed)
    : EpisodicPolicy(std::move(schedule), std::move(initialEstimate), std::move(cost), seed),
      priorPrecision_(std::move(priorPrecision)),
      priorMean_(estimate().stacked()) {
  const Index q = accumulator().gram.rows();
  if (priorPrecision_.rows() != q || !isSymmetricPositiveDefinite(priorPrecision_)) {
    throw Error(ErrorCode::InvalidConfig, "prior precision must be a q x q PD matrix");
  }
  precision_ = priorPrecision_;
}

Matrix TsPolicy::fitCenter(std::int64_t) {
  const RegressorAccumulator& acc = accumulator();
  precision_ = symmetrized(priorPrecision_ + acc.gram);
  const Matrix rhs = acc.cross + priorMean_ * priorPrecision_;
  return precision_.ldlt().solve(rhs.transpose()).transpose();
}

Matrix TsPolicy::drawPerturbation(std::int64_t, const Matrix& center) {
  return samplePosterior(Matrix::Zero(center.rows(), center.cols()), precision_, rng());
}

GcePerturbation GcePerturbation::none() {
  return GcePerturbation{0.0, {}};
}

GcePerturbation GcePerturbation::randomDirection(double c, Index p, Index q) {
  if (!(c >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "perturbation envelope must be nonnegative");
  }
  return GcePerturbation{c, [c, p, q](std::int64_t n, Rng& rng) -> Matrix {
                           const Matrix phi = standardGaussian(p, q, rng);
                           const double nn = static_cast<double>(std::max<std::int64_t>(n, 1));
                           return c / std::sqrt(nn) * phi / operatorNorm(phi);
                         }};
}

GcePolicy::GcePolicy(EpisodeSchedule schedule, SideInformation side, GcePerturbation perturbation,
                     DynamicsParameter initialEstimate, CostSpec cost, std::uint64_t seed,
                     double ridge)
    : EpisodicPolicy(std::move(schedule), std::move(initialEstimate), std::move(cost), seed),
      side_(std::move(side)),
      perturbation_(std::move(perturbation)),
      ridge_(ridge),
      priorMean_(estimate().stacked()) {
  if (!side_.isAffine()) {
    throw Error(ErrorCode::UnsupportedConstraint,
                "GCE needs a support or subspace side-information set");
  }
  if (perturbation_.envelope > 0.0 && !perturbation_.rule) {
    throw Error(ErrorCode::InvalidConfig, "nonzero perturbation envelope without a rule");
  }
}

Matrix GcePolicy::fitCenter(std::int64_t) {
  return constrainedLeastSquares(accumulator(), side_, ridge_, &priorMean_).theta.stacked();
}

Matrix GcePolicy::drawPerturbation(std::int64_t n, const Matrix& center) {
  if (perturbation_.envelope <= 0.0) {
    return Matrix::Zero(center.rows(), center.cols());
  }
  Matrix lambda = perturbation_.rule(n, rng());
  const double cap = perturbation_.envelope / std::sqrt(static_cast<double>(std::max<std::int64_t>(n, 1)));
  const double size = operatorNorm(lambda);
  if (size > cap) {
    lambda *= cap / size;
  }
  return lambda;
}

std::unique_ptr<RcePolicy> rcePolicy(const EpisodeSchedule& schedule, double sigma0,
                                     const DynamicsParameter& initialEstimate,
                                     const CostSpec& cost, std::uint64_t seed) {
  return std::make_unique<RcePolicy>(schedule, sigma0, initialEstimate, cost, seed);
}

std::unique_ptr<TsPolicy> tsPolicy(const EpisodeSchedule& schedule, const Matrix& priorPrecision,
                                   const DynamicsParameter& initialEstimate, const CostSpec& cost,
                                   std::uint64_t seed) {
  return std::make_unique<TsPolicy>(schedule, priorPrecision, initialEstimate, cost, seed);
}

std::unique_ptr<GcePolicy> gcePolicy(const EpisodeSchedule& schedule, const SideInformation& side,
                                     const GcePerturbation& perturbation,
                                     const DynamicsParameter& initialEstimate,
                                     const CostSpec& cost, std::uint64_t seed) {
  return std::make_unique<GcePolicy>(schedule, side, perturbation, initialEstimate, cost, seed);
}

std::unique_ptr<GcePolicy> cePolicy(const EpisodeSchedule& schedule,
                                    const DynamicsParameter& initialEstimate,
                                    const CostSpec& cost) {
  return std::make_unique<GcePolicy>(
      schedule, SideInformation::unconstrained(initialEstimate.stateDim(), initialEstimate.regressorDim()),
      GcePerturbation::none(), initialEstimate, cost);
}

DynamicsParameter defaultInitialEstimate(const DynamicsParameter& theta0, const CostSpec& cost,
                                         std::uint64_t seed) {
  Rng rng(seed);
  const Matrix truth = theta0.stacked();
  const Matrix g = standardGaussian(truth.rows(), truth.cols(), rng);
  double eps = 0.05 * operatorNorm(truth);
  for (int attempt = 0; attempt < 20; ++attempt, eps *= 0.5) {
    const DynamicsParameter candidate =
        DynamicsParameter::fromStacked(truth + eps * g, theta0.stateDim());
    try {
      const RiccatiSolution sol = solveRiccati(candidate, cost);
      if (spectralRadius(truth * sol.extendedFeedback()).isStable) {
        return candidate;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotStabilizable) throw;
    }
  }
  throw Error(ErrorCode::NotStabilizable, "no stabilizing initial estimate found near theta0");
}

}  // namespace alqr

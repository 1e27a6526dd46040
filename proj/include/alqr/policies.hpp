#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <memory>
#include <string_view>
#include <vector>

#include "alqr/estimation.hpp"
#include "alqr/linalg.hpp"
#include "alqr/policy.hpp"
#include "alqr/side_information.hpp"
#include "alqr/system.hpp"

namespace alqr {

/// Stationary u(t) = L x(t).
class LinearFeedbackPolicy final : public Policy {
 public:
  explicit LinearFeedbackPolicy(Matrix gain, std::string label = "linear");

  Action act(const History& history) override;
  std::string_view name() const override { return label_; }
  const Matrix& gain() const { return gain_; }

 private:
  Matrix gain_;
  std::string label_;
};

/// The optimal regulator u(t) = L(theta0) x(t).
std::unique_ptr<LinearFeedbackPolicy> optimalPolicy(const DynamicsParameter& theta0,
                                                    const CostSpec& cost);

inline constexpr int kMaxRedraws = 100;
/// Ridge weight of the RCE and GCE fits, pulling toward the initial estimate:
/// theta_hat = (cross + ridge theta_hat_0)(gram + ridge I)^{-1}, the same
/// unit prior TS starts from.
inline constexpr double kDefaultRidge = 1.0;

/// One boundary update of an episodic policy.
struct UpdateRecord {
  std::int64_t n = 0;
  Matrix center;        ///< (constrained) least-squares fit or posterior mean
  Matrix perturbation;  ///< estimate - center for the accepted draw
  int attempts = 0;
  bool accepted = false;  ///< false: redraws exhausted, previous gain kept
};

/// Shared machinery of the certainty-equivalence family: apply L(theta_hat)
/// x(t), accumulate regression statistics from the observed history, and at
/// each deduplicated boundary floor(gamma^m) refit, perturb, and re-solve the
/// Riccati equation. None of these policies is ever given the true parameter.
class EpisodicPolicy : public Policy {
 public:
  Action act(const History& history) override;

  const DynamicsParameter& estimate() const { return estimate_; }
  const Matrix& gain() const { return gain_; }
  const RegressorAccumulator& accumulator() const { return acc_; }
  const std::vector<UpdateRecord>& updates() const { return updates_; }
  int exhaustedUpdates() const { return exhausted_; }
  const EpisodeSchedule& schedule() const { return schedule_; }

 protected:
  EpisodicPolicy(EpisodeSchedule schedule, DynamicsParameter initialEstimate, CostSpec cost,
                 std::uint64_t seed);

  virtual Matrix fitCenter(std::int64_t n) = 0;
  /// Perturbation added to the center on a given draw.
  virtual Matrix drawPerturbation(std::int64_t n, const Matrix& center) = 0;
  /// Whether redrawing can produce a different candidate.
  virtual bool randomized() const = 0;

  const CostSpec& cost() const { return cost_; }
  Rng& rng() { return rng_; }
  Index stateDim() const { return estimate_.stateDim(); }

 private:
  void update(std::int64_t n);

  EpisodeSchedule schedule_;
  CostSpec cost_;
  DynamicsParameter estimate_;
  Matrix gain_;
  RegressorAccumulator acc_;
  Rng rng_;
  std::size_t consumed_ = 0;  // transitions already folded into acc_
  std::int64_t lastUpdate_ = -1;
  std::vector<UpdateRecord> updates_;
  int exhausted_ = 0;
};

/// max(n,2)^{-1/4} log(max(n,2))^{1/4}
double rcePerturbationScale(std::int64_t n);

/// Randomized certainty equivalence: least squares plus
/// Lambda_n = scale(n) phi_m, phi_m with i.i.d. N(0, sigma0^2) entries.
class RcePolicy final : public EpisodicPolicy {
 public:
  RcePolicy(EpisodeSchedule schedule, double sigma0, DynamicsParameter initialEstimate,
            CostSpec cost, std::uint64_t seed, double ridge = kDefaultRidge);

  std::string_view name() const override { return "rce"; }

 protected:
  Matrix fitCenter(std::int64_t n) override;
  Matrix drawPerturbation(std::int64_t n, const Matrix& center) override;
  bool randomized() const override { return sigma0_ > 0.0; }

 private:
  double sigma0_;
  double ridge_;
  Matrix priorMean_;
};

/// Row-wise draw theta_i ~ N(mean_i, precision^{-1}).
Matrix samplePosterior(const Matrix& mean, const Matrix& precision, Rng& rng);

/// Thompson sampling: at each boundary draw every row of theta_hat from
/// N(mu_m, Sigma_m^{-1}) with Sigma_m = Sigma_0 + gram. The initial estimate
/// is the prior mean mu_0, so mu_m = (cross + mu_0 Sigma_0) Sigma_m^{-1}.
class TsPolicy final : public EpisodicPolicy {
 public:
  TsPolicy(EpisodeSchedule schedule, Matrix priorPrecision, DynamicsParameter initialEstimate,
           CostSpec cost, std::uint64_t seed);

  std::string_view name() const override { return "ts"; }
  const Matrix& lastPrecision() const { return precision_; }

 protected:
  Matrix fitCenter(std::int64_t n) override;
  Matrix drawPerturbation(std::int64_t n, const Matrix& center) override;
  bool randomized() const override { return true; }

 private:
  Matrix priorPrecision_;
  Matrix priorMean_;
  Matrix precision_;
};

/// Perturbation rule for GCE together with its envelope constant c:
/// ||Lambda_n|| <= c n^{-1/2}. Rule outputs above the envelope are scaled down.
struct GcePerturbation {
  double envelope = 0.0;
  std::function<Matrix(std::int64_t n, Rng& rng)> rule;

  /// Lambda = 0: plain episodic certainty equivalence.
  static GcePerturbation none();
  /// Lambda_n = c n^{-1/2} phi / ||phi||, phi standard Gaussian p x q.
  static GcePerturbation randomDirection(double c, Index p, Index q);
};

/// Generalized certainty equivalence: least squares constrained to the side
/// information set plus a perturbation under the n^{-1/2} envelope.
class GcePolicy final : public EpisodicPolicy {
 public:
  GcePolicy(EpisodeSchedule schedule, SideInformation side, GcePerturbation perturbation,
            DynamicsParameter initialEstimate, CostSpec cost, std::uint64_t seed = 0,
            double ridge = kDefaultRidge);

  std::string_view name() const override { return "gce"; }
  const SideInformation& side() const { return side_; }

 protected:
  Matrix fitCenter(std::int64_t n) override;
  Matrix drawPerturbation(std::int64_t n, const Matrix& center) override;
  bool randomized() const override { return perturbation_.envelope > 0.0; }

 private:
  SideInformation side_;
  GcePerturbation perturbation_;
  double ridge_;
  Matrix priorMean_;
};

std::unique_ptr<RcePolicy> rcePolicy(const EpisodeSchedule& schedule, double sigma0,
                                     const DynamicsParameter& initialEstimate,
                                     const CostSpec& cost, std::uint64_t seed);
std::unique_ptr<TsPolicy> tsPolicy(const EpisodeSchedule& schedule, const Matrix& priorPrecision,
                                   const DynamicsParameter& initialEstimate, const CostSpec& cost,
                                   std::uint64_t seed);
std::unique_ptr<GcePolicy> gcePolicy(const EpisodeSchedule& schedule, const SideInformation& side,
                                     const GcePerturbation& perturbation,
                                     const DynamicsParameter& initialEstimate,
                                     const CostSpec& cost, std::uint64_t seed = 0);
/// Episodic CE on the unconstrained least-squares fit.
std::unique_ptr<GcePolicy> cePolicy(const EpisodeSchedule& schedule,
                                    const DynamicsParameter& initialEstimate,
                                    const CostSpec& cost);

/// Starting estimate whose gain stabilizes theta0: theta0 + eps G with
/// eps = 0.05 ||theta0||, halving eps on failure (at most 20 attempts).
/// This is experiment setup, so it sees theta0; adaptive policies do not.
DynamicsParameter defaultInitialEstimate(const DynamicsParameter& theta0, const CostSpec& cost,
                                         std::uint64_t seed);

}  // namespace alqr

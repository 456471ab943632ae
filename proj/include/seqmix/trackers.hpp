#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqmix/common.hpp"
#include "seqmix/evidence.hpp"
#include "seqmix/mixing.hpp"
#include "seqmix/models.hpp"
#include "seqmix/online.hpp"
#include "seqmix/spaces.hpp"

namespace seqmix {

enum class TrackerKind { SeqLikelihoodRatio, SeqMixing, SubGaussian };

/// Running log of the predictable mixture term
///   sum_s log integral p_s(y_s | nu) dmu_{s-1}(nu)
/// behind the threshold beta_t(delta) = log(1/delta) - sum.
///
/// `step` takes the mixing distribution (or estimate) that was fixed before
/// the observation together with the observation; there is no way to edit
/// past steps.
class MartingaleTracker {
 public:
  /// Dirac mixtures only (theta_hat_{s-1}).
  static MartingaleTracker seq_likelihood_ratio(const ModelFamily& model);
  static MartingaleTracker seq_mixing(const ModelFamily& model);
  /// Mean model <theta, x> with sigma-sub-Gaussian noise. Uses the Gaussian
  /// pseudo-likelihood without its normalizing constant.
  static MartingaleTracker sub_gaussian(int dimension, double sigma);

  void step(const MixingDistribution& mixing, const Observation& obs);

  /// beta_t(delta) = log(1/delta) - cum_predictive_log().
  double threshold(double delta) const;

  TrackerKind kind() const { return kind_; }
  const ModelFamily& model() const { return model_; }
  double cum_predictive_log() const { return cum_; }
  std::size_t steps() const { return steps_; }
  double sigma() const { return model_.noise_std(); }

 private:
  MartingaleTracker(TrackerKind kind, ModelFamily model)
      : kind_(kind), model_(std::move(model)) {}

  TrackerKind kind_;
  ModelFamily model_;
  double cum_ = 0.0;
  std::size_t steps_ = 0;
};

MartingaleTracker tracker_step(MartingaleTracker tracker,
                               const MixingDistribution& mixing,
                               const Observation& obs);

enum class Construction {
  SeqLikelihoodRatio,
  PriorMixing,
  SeqMixing,
  ELBO,
  UnionBound,
  RegretToConfidence,
  SubGaussian,
};

enum class Statistic {
  NegLogLikelihood,  // L_t(theta)
  SquaredLoss,       // sum (<theta, x_s> - y_s)^2 / (2 sigma_s^2)
};

/// Lazy level set {theta : statistic_t(theta) <= threshold}. Holds a view of
/// the data prefix; the caller keeps the observations alive.
struct ConfidenceSet {
  Construction construction = Construction::PriorMixing;
  Statistic statistic = Statistic::NegLogLikelihood;
  double delta = 0.05;
  double threshold = 0.0;
  ModelFamily model = ModelFamily::logistic(1);
  std::span<const Observation> data;

  double statistic_at(const Vector& theta) const;
  bool contains(const Vector& theta) const;
  /// Statistic at every atom (rows of `atoms`).
  std::vector<double> statistic_on(const Matrix& atoms) const;
  /// Membership of every atom.
  std::vector<bool> members(const Matrix& atoms) const;
};

/// log(1/delta) - log evidence.
double evidence_threshold(double delta, double log_evidence);

ConfidenceSet tracker_set(const MartingaleTracker& tracker,
                          std::span<const Observation> data, double delta);

/// Prior mixing with the grid/finite prior of `space`.
ConfidenceSet prior_mixing_set(const ModelFamily& model,
                               std::span<const Observation> data,
                               const ParameterSpace& space, double delta);

/// Prior mixing with an exact Gaussian prior (Gaussian-linear model).
ConfidenceSet prior_mixing_set(std::span<const Observation> data,
                               const GaussianPosteriorState& prior, double delta);

/// ELBO relaxation: log(1/delta) - ELBO(rho).
ConfidenceSet elbo_set(const ModelFamily& model, std::span<const Observation> data,
                       const EvidenceResult& lower_bound, double delta);

/// -log mu_t(theta) <= log(1/delta) - log mu_0(theta), atom-wise.
bool prior_posterior_ratio_membership(const Vector& log_prior,
                                      const Vector& log_posterior,
                                      std::size_t index, double delta);

/// log(m/delta) + L_t(theta_hat).
double union_bound_threshold(std::size_t m, double delta, double nll_at_estimate);

/// log(1/delta) + L_t(theta_hat_MLE) + B_t.
double regret_to_confidence_threshold(double delta, double nll_mle, double b_t);
double regret_to_confidence_threshold(double delta, double nll_mle,
                                      const RegretCertificate& certificate,
                                      std::size_t t);

enum class EllipsoidForm { Exact, BallRelaxed };

/// Gaussian-linear confidence ellipsoid around the RLS estimate.
///   Exact:       1/2 |theta - mean|_{V_t}^2 <= log(1/delta) + gamma_t
///                                              + 1/2 |theta - theta_0|_{V_0}^2
///   BallRelaxed: 1/2 |theta - mean|_{V_t}^2 <= log(1/delta) + 1/2 log det V_t
///                                              - (d/2) log lambda + lambda S^2 / 2
struct GaussianEllipsoidSet {
  EllipsoidForm form = EllipsoidForm::Exact;
  Vector center;
  Matrix precision;
  Vector prior_mean;
  Matrix prior_precision;
  double delta = 0.05;
  double gamma = 0.0;
  double radius = 0.0;  // S (BallRelaxed)
  double lambda = 0.0;  // V_0 = lambda I (BallRelaxed)

  double lhs(const Vector& theta) const;
  /// Right-hand side; depends on theta only for the Exact form.
  double rhs(const Vector& theta) const;
  bool contains(const Vector& theta) const;
};

GaussianEllipsoidSet rls_ellipsoid(const GaussianPosteriorState& state,
                                   double delta, EllipsoidForm form,
                                   double radius = 0.0);

/// Gaussian prior-posterior ratio membership evaluated from the two densities.
bool gaussian_ratio_membership(const GaussianPosteriorState& state,
                               const Vector& theta, double delta);

}  // namespace seqmix

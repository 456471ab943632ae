#pragma once

#include <memory>
#include <optional>
#include <span>
#include <variant>

#include "seqmix/common.hpp"
#include "seqmix/models.hpp"
#include "seqmix/online.hpp"
#include "seqmix/spaces.hpp"

namespace seqmix {

/// Normalized log-weights over the atoms of a parameter space.
struct FiniteWeights {
  std::shared_ptr<const ParameterSpace> space;
  Vector log_weights;
};

struct GaussianMixing {
  Vector mean;
  Matrix precision;
};

struct Dirac {
  Vector atom;
};

/// Equal-weight particle cloud, one particle per row.
struct Particles {
  Matrix atoms;
};

using MixingDistribution =
    std::variant<FiniteWeights, GaussianMixing, Dirac, Particles>;

/// The space's prior, renormalized to a probability vector.
FiniteWeights prior_weights(std::shared_ptr<const ParameterSpace> space);

/// log w_i <- log w_i + eta * step_i, renormalized. eta = 1 is Bayes.
FiniteWeights ew_update(const FiniteWeights& weights,
                        std::span<const double> step_log_densities,
                        double eta = 1.0);

/// Batch (tempered) posterior: prior times exp(-eta * L_t), normalized.
FiniteWeights finite_posterior(std::shared_ptr<const ParameterSpace> space,
                               const ModelFamily& model,
                               std::span<const Observation> data,
                               double eta = 1.0);

/// Conjugate Gaussian posterior N(mean, precision^-1) for the
/// Gaussian-linear model with prior N(prior_mean, prior_precision^-1).
struct GaussianPosteriorState {
  Vector mean;
  Matrix precision;
  Vector prior_mean;
  Matrix prior_precision;
  double noise_std = 1.0;
  double log_det_V0 = 0.0;
  Vector info;  // precision * mean

  static GaussianPosteriorState prior(const Vector& prior_mean,
                                      const Matrix& prior_precision,
                                      double noise_std);
  /// V0 = lambda I, theta0 = 0.
  static GaussianPosteriorState ridge(int d, double lambda, double noise_std);

  int dimension() const { return static_cast<int>(mean.size()); }
  /// 1/2 log det V_t - 1/2 log det V_0.
  double gamma() const;
  GaussianMixing as_mixing() const { return {mean, precision}; }
};

GaussianPosteriorState gaussian_conjugate_update(
    const GaussianPosteriorState& state, const Observation& obs);

struct LaplaceFit {
  Vector map_estimate;
  Matrix precision;
  double log_evidence_estimate = 0.0;
  FitResult fit;
};

/// Laplace expansion of the posterior under the uniform prior on B(0, S).
LaplaceFit laplace_approximate(const ModelFamily& model,
                               std::span<const Observation> data,
                               const ParameterSpace& space,
                               const std::optional<Vector>& warm_start = std::nullopt);

/// log of the mixture density  integral p(y | nu; x) dmu(nu).
double predictive_log_mixture(const MixingDistribution& mu,
                              const ModelFamily& model, const Observation& obs);

}  // namespace seqmix

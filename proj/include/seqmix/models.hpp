#pragma once

#include <optional>
#include <span>

#include "seqmix/common.hpp"
#include "seqmix/rng.hpp"

namespace seqmix {

enum class ModelKind { GaussianLinear, LogisticBernoulli, FiniteCategorical };

/// One (x_t, y_t) pair. `noise_std` overrides the model's sigma for this
/// observation (heteroscedastic Gaussian); ignored by other models.
struct Observation {
  Vector covariate;
  double outcome = 0.0;
  std::optional<double> noise_std;
};

/// Conditional density family p(y | theta; x). Immutable after construction.
///
/// - GaussianLinear:    y ~ N(<theta, x>, sigma^2), theta in R^d.
/// - LogisticBernoulli: y ~ Ber(sigmoid(<theta, x>)), theta in R^d.
/// - FiniteCategorical: multinomial logit over {0, ..., K-1} with class 0 as
///   reference; theta has (K-1)*d entries, block j-1 holds class-j weights.
class ModelFamily {
 public:
  static ModelFamily gaussian_linear(int dimension, double noise_std);
  static ModelFamily logistic(int dimension);
  static ModelFamily categorical(int dimension, int num_outcomes);

  ModelKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  int parameter_dimension() const;
  double noise_std() const { return noise_std_; }
  int num_outcomes() const { return num_outcomes_; }

  /// sigma_t for an observation (per-observation override or model sigma).
  double noise_std_for(const Observation& obs) const;

  /// Linear predictor <theta, x> (Gaussian mean / logistic logit).
  double linear_predictor(const Vector& theta, const Vector& x) const;

  /// Throws std::invalid_argument if (theta, obs) do not fit this model.
  void check(const Vector& theta, const Observation& obs) const;

 private:
  ModelFamily(ModelKind kind, int dimension, double noise_std, int outcomes)
      : kind_(kind), dimension_(dimension), noise_std_(noise_std),
        num_outcomes_(outcomes) {}

  ModelKind kind_;
  int dimension_;
  double noise_std_;
  int num_outcomes_;
};

double log_density(const ModelFamily& model, const Vector& theta,
                   const Observation& obs);

/// L_t(theta) = -sum_s log p_s(y_s | theta); 0 for empty data.
double neg_log_likelihood(const ModelFamily& model, const Vector& theta,
                          std::span<const Observation> data);

double sample_outcome(const ModelFamily& model, const Vector& theta,
                      const Vector& covariate, Rng& rng);

}  // namespace seqmix

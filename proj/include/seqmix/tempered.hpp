#pragma once

#include <functional>
#include <span>
#include <vector>

#include "seqmix/common.hpp"
#include "seqmix/models.hpp"

namespace seqmix {

/// D_zeta(N(m1, s^2) || N(m2, s^2)) = zeta (m1 - m2)^2 / (2 s^2).
double renyi_gaussian(double m1, double m2, double sigma, double zeta);
/// H^2 = 2 (1 - exp(-(m1 - m2)^2 / (8 s^2))).
double hellinger_sq_gaussian(double m1, double m2, double sigma);

/// Adaptive Gauss-Kronrod evaluation of the defining integrals for two
/// densities on the real line (log-densities given).
double renyi_numeric(const std::function<double(double)>& log_p,
                     const std::function<double(double)>& log_q, double zeta);
double hellinger_sq_numeric(const std::function<double(double)>& log_p,
                            const std::function<double(double)>& log_q);

/// Same divergences for densities on a finite outcome alphabet.
double renyi_discrete(std::span<const double> log_p, std::span<const double> log_q,
                      double zeta);
double hellinger_sq_discrete(std::span<const double> log_p,
                             std::span<const double> log_q);

/// D_zeta(p(.|theta; x) || p(.|theta_ref; x)) for the model at one covariate.
double renyi_model(const ModelFamily& model, const Vector& theta,
                   const Vector& theta_ref, const Observation& at, double zeta);
double hellinger_sq_model(const ModelFamily& model, const Vector& theta,
                          const Vector& theta_ref, const Observation& at);

/// -log integral p(y|theta_hat)^beta p(y|theta)^(1-beta) dy
///   = beta * D_{1-beta}(theta || theta_hat).
double tempered_log_normalizer(const ModelFamily& model, const Vector& theta,
                               const Vector& theta_hat, const Observation& at,
                               double beta);

enum class TemperedVariant { Renyi, Hellinger };

/// Stream of (theta_hat_{s-1}, (x_s, y_s)) pairs behind the tempered sets.
class TemperedState {
 public:
  TemperedState(ModelFamily model, double beta);

  /// `estimate` must have been chosen before `obs` was seen.
  void step(const Vector& estimate, const Observation& obs);

  /// sum_s D_{1-beta,s}(theta || theta_hat_{s-1}) or sum_s H^2_s.
  double divergence_sum(const Vector& theta, TemperedVariant variant) const;
  /// Lambda_t(theta) = -sum_s log p_s(y_s | theta_hat_{s-1}) - L_t(theta).
  double regret(const Vector& theta) const;
  /// (1/beta) log(1/delta), or 2 log(1/delta) for Hellinger.
  double threshold(double delta, TemperedVariant variant) const;
  bool contains(const Vector& theta, double delta, TemperedVariant variant) const;

  double beta() const { return beta_; }
  std::size_t steps() const { return data_.size(); }
  const std::vector<Vector>& estimates() const { return estimates_; }
  const std::vector<Observation>& data() const { return data_; }

 private:
  ModelFamily model_;
  double beta_;
  std::vector<Vector> estimates_;
  std::vector<Observation> data_;
  double cum_log_pred_ = 0.0;
};

bool tempered_membership(const TemperedState& state, const Vector& theta,
                         double delta, TemperedVariant variant);

/// Vovk-Azoury-Warmuth forecaster state: A = lambda I + sum x x^T, b = sum y x.
struct VawState {
  Matrix gram;
  Vector moment;
  double lambda = 1.0;

  static VawState make(int d, double lambda);
};

/// y_hat = x^T (A + x x^T)^-1 b.
double vaw_predict(const VawState& state, const Vector& x);
VawState vaw_update(VawState state, const Observation& obs);

/// (1/(beta - beta^2)) log(1/delta) + (beta/(beta - beta^2)) B_t.
double online_to_confidence_threshold(double b_t, double beta, double delta);
/// sum_s 1/2 (y_hat_{s-1} - <theta, x_s>)^2 / sigma^2.
double online_to_confidence_statistic(std::span<const double> predictions,
                                      std::span<const Observation> data,
                                      const Vector& theta, double noise_std = 1.0);
bool online_to_confidence_membership(std::span<const double> predictions,
                                     std::span<const Observation> data,
                                     const Vector& theta, double b_t, double beta,
                                     double delta, double noise_std = 1.0);

/// Earlier online-to-confidence threshold at beta = 1/2, for comparison:
/// 16 log(1/delta) + 1/2 + 2 B_t + 16 log(sqrt 8 + sqrt(1 + 2 B_t)).
double reference_online_threshold(double b_t, double delta);

}  // namespace seqmix

#include "seqmix/tempered.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

namespace seqmix {

namespace {

void require_zeta(double zeta) {
  require(zeta > 0.0 && zeta < 1.0, "Renyi order must lie in (0, 1)");
}

double integrate_real_line(const std::function<double(double)>& f) {
  using boost::math::quadrature::gauss_kronrod;
  const double inf = std::numeric_limits<double>::infinity();
  return gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-13);
}

/// Log-densities of every outcome of a discrete model at one covariate.
std::vector<double> outcome_log_densities(const ModelFamily& model,
                                          const Vector& theta,
                                          const Observation& at) {
  const int k = model.kind() == ModelKind::LogisticBernoulli ? 2 : model.num_outcomes();
  std::vector<double> out(static_cast<std::size_t>(k));
  Observation o = at;
  for (int y = 0; y < k; ++y) {
    o.outcome = y;
    out[static_cast<std::size_t>(y)] = log_density(model, theta, o);
  }
  return out;
}

}  // namespace

double renyi_gaussian(double m1, double m2, double sigma, double zeta) {
  require_zeta(zeta);
  require(sigma > 0.0, "sigma must be positive");
  const double diff = m1 - m2;
  return zeta * diff * diff / (2.0 * sigma * sigma);
}

double hellinger_sq_gaussian(double m1, double m2, double sigma) {
  require(sigma > 0.0, "sigma must be positive");
  const double diff = m1 - m2;
  return -2.0 * std::expm1(-diff * diff / (8.0 * sigma * sigma));
}

double renyi_numeric(const std::function<double(double)>& log_p,
                     const std::function<double(double)>& log_q, double zeta) {
  require_zeta(zeta);
  const double mass = integrate_real_line([&](double y) {
    return std::exp(zeta * log_p(y) + (1.0 - zeta) * log_q(y));
  });
  return std::log(mass) / (zeta - 1.0);
}

double hellinger_sq_numeric(const std::function<double(double)>& log_p,
                            const std::function<double(double)>& log_q) {
  return integrate_real_line([&](double y) {
    const double a = std::exp(0.5 * log_p(y)) - std::exp(0.5 * log_q(y));
    return a * a;
  });
}

double renyi_discrete(std::span<const double> log_p, std::span<const double> log_q,
                      double zeta) {
  require_zeta(zeta);
  require(log_p.size() == log_q.size() && !log_p.empty(),
          "renyi_discrete: alphabets differ");
  std::vector<double> terms(log_p.size());
  for (std::size_t i = 0; i < terms.size(); ++i) {
    terms[i] = zeta * log_p[i] + (1.0 - zeta) * log_q[i];
  }
  return std::max(0.0, log_sum_exp(terms) / (zeta - 1.0));
}

double hellinger_sq_discrete(std::span<const double> log_p,
                             std::span<const double> log_q) {
  require(log_p.size() == log_q.size() && !log_p.empty(),
          "hellinger_sq_discrete: alphabets differ");
  double h = 0.0;
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    const double a = std::exp(0.5 * log_p[i]) - std::exp(0.5 * log_q[i]);
    h += a * a;
  }
  return h;
}

double renyi_model(const ModelFamily& model, const Vector& theta,
                   const Vector& theta_ref, const Observation& at, double zeta) {
  model.check(theta, at);
  model.check(theta_ref, at);
  if (model.kind() == ModelKind::GaussianLinear) {
    return renyi_gaussian(model.linear_predictor(theta, at.covariate),
                          model.linear_predictor(theta_ref, at.covariate),
                          model.noise_std_for(at), zeta);
  }
  const auto p = outcome_log_densities(model, theta, at);
  const auto q = outcome_log_densities(model, theta_ref, at);
  return renyi_discrete(p, q, zeta);
}

double hellinger_sq_model(const ModelFamily& model, const Vector& theta,
                          const Vector& theta_ref, const Observation& at) {
  model.check(theta, at);
  model.check(theta_ref, at);
  if (model.kind() == ModelKind::GaussianLinear) {
    return hellinger_sq_gaussian(model.linear_predictor(theta, at.covariate),
                                 model.linear_predictor(theta_ref, at.covariate),
                                 model.noise_std_for(at));
  }
  const auto p = outcome_log_densities(model, theta, at);
  const auto q = outcome_log_densities(model, theta_ref, at);
  return hellinger_sq_discrete(p, q);
}

double tempered_log_normalizer(const ModelFamily& model, const Vector& theta,
                               const Vector& theta_hat, const Observation& at,
                               double beta) {
  require(beta > 0.0 && beta < 1.0, "temperature beta must lie in (0, 1)");
  return beta * renyi_model(model, theta, theta_hat, at, 1.0 - beta);
}

TemperedState::TemperedState(ModelFamily model, double beta)
    : model_(std::move(model)), beta_(beta) {
  require(beta > 0.0 && beta < 1.0, "temperature beta must lie in (0, 1)");
}

void TemperedState::step(const Vector& estimate, const Observation& obs) {
  model_.check(estimate, obs);
  cum_log_pred_ += log_density(model_, estimate, obs);
  estimates_.push_back(estimate);
  data_.push_back(obs);
}

double TemperedState::divergence_sum(const Vector& theta,
                                     TemperedVariant variant) const {
  double total = 0.0;
  for (std::size_t s = 0; s < data_.size(); ++s) {
    total += variant == TemperedVariant::Renyi
                 ? renyi_model(model_, theta, estimates_[s], data_[s], 1.0 - beta_)
                 : hellinger_sq_model(model_, theta, estimates_[s], data_[s]);
  }
  return total;
}

double TemperedState::regret(const Vector& theta) const {
  return -cum_log_pred_ - neg_log_likelihood(model_, theta, data_);
}

double TemperedState::threshold(double delta, TemperedVariant variant) const {
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  const double base = -std::log(delta);
  return variant == TemperedVariant::Renyi ? base / beta_ : 2.0 * base;
}

bool TemperedState::contains(const Vector& theta, double delta,
                             TemperedVariant variant) const {
  const double thr = threshold(delta, variant);
  return divergence_sum(theta, variant) - regret(theta) <= thr;
}

bool tempered_membership(const TemperedState& state, const Vector& theta,
                         double delta, TemperedVariant variant) {
  return state.contains(theta, delta, variant);
}

VawState VawState::make(int d, double lambda) {
  require(d >= 1 && lambda > 0.0, "VAW: need d >= 1 and lambda > 0");
  return {Matrix::Identity(d, d) * lambda, Vector::Zero(d), lambda};
}

double vaw_predict(const VawState& state, const Vector& x) {
  require(x.size() == state.moment.size(), "vaw_predict: dimension mismatch");
  Matrix a = state.gram;
  a.noalias() += x * x.transpose();
  return x.dot(a.llt().solve(state.moment));
}

VawState vaw_update(VawState state, const Observation& obs) {
  require(obs.covariate.size() == state.moment.size(), "vaw_update: dimension mismatch");
  state.gram.noalias() += obs.covariate * obs.covariate.transpose();
  state.moment.noalias() += obs.outcome * obs.covariate;
  return state;
}

double online_to_confidence_threshold(double b_t, double beta, double delta) {
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0, 1)");
  require(b_t >= 0.0, "regret bound B_t must be nonnegative");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  const double denom = beta - beta * beta;
  return -std::log(delta) / denom + beta / denom * b_t;
}

double online_to_confidence_statistic(std::span<const double> predictions,
                                      std::span<const Observation> data,
                                      const Vector& theta, double noise_std) {
  require(predictions.size() == data.size(),
          "online_to_confidence: one prediction per observation required");
  require(noise_std > 0.0, "noise_std must be positive");
  double total = 0.0;
  for (std::size_t s = 0; s < data.size(); ++s) {
    require(data[s].covariate.size() == theta.size(),
            "online_to_confidence: dimension mismatch");
    const double r = predictions[s] - data[s].covariate.dot(theta);
    total += 0.5 * r * r;
  }
  return total / (noise_std * noise_std);
}

bool online_to_confidence_membership(std::span<const double> predictions,
                                     std::span<const Observation> data,
                                     const Vector& theta, double b_t, double beta,
                                     double delta, double noise_std) {
  const double thr = online_to_confidence_threshold(b_t, beta, delta);
  return online_to_confidence_statistic(predictions, data, theta, noise_std) <= thr;
}

double reference_online_threshold(double b_t, double delta) {
  require(b_t >= 0.0, "regret bound B_t must be nonnegative");
  require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
  return -16.0 * std::log(delta) + 0.5 + 2.0 * b_t +
         16.0 * std::log(std::sqrt(8.0) + std::sqrt(1.0 + 2.0 * b_t));
}

}  // namespace seqmix

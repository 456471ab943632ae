#include "seqmix/models.hpp"

#include <random>
#include <string>
#include <vector>

namespace seqmix {

double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = v > m ? v : m;
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw DegeneratePosterior("matrix is not positive definite");
  }
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

ModelFamily ModelFamily::gaussian_linear(int dimension, double noise_std) {
  require(dimension > 0, "model dimension must be positive");
  require(noise_std > 0.0 && std::isfinite(noise_std),
          "noise_std must be positive");
  return {ModelKind::GaussianLinear, dimension, noise_std, 0};
}

ModelFamily ModelFamily::logistic(int dimension) {
  require(dimension > 0, "model dimension must be positive");
  return {ModelKind::LogisticBernoulli, dimension, 0.0, 2};
}

ModelFamily ModelFamily::categorical(int dimension, int num_outcomes) {
  require(dimension > 0, "model dimension must be positive");
  require(num_outcomes >= 2, "categorical model needs at least two outcomes");
  return {ModelKind::FiniteCategorical, dimension, 0.0, num_outcomes};
}

int ModelFamily::parameter_dimension() const {
  if (kind_ == ModelKind::FiniteCategorical) {
    return (num_outcomes_ - 1) * dimension_;
  }
  return dimension_;
}

double ModelFamily::noise_std_for(const Observation& obs) const {
  if (kind_ != ModelKind::GaussianLinear) return noise_std_;
  if (obs.noise_std) {
    require(*obs.noise_std > 0.0, "observation noise_std must be positive");
    return *obs.noise_std;
  }
  return noise_std_;
}

double ModelFamily::linear_predictor(const Vector& theta,
                                     const Vector& x) const {
  return theta.head(dimension_).dot(x);
}

void ModelFamily::check(const Vector& theta, const Observation& obs) const {
  if (obs.covariate.size() != dimension_) {
    throw std::invalid_argument("covariate length " +
                                std::to_string(obs.covariate.size()) +
                                " != model dimension " +
                                std::to_string(dimension_));
  }
  if (theta.size() != parameter_dimension()) {
    throw std::invalid_argument("parameter length " +
                                std::to_string(theta.size()) +
                                " != parameter dimension " +
                                std::to_string(parameter_dimension()));
  }
  switch (kind_) {
    case ModelKind::LogisticBernoulli:
      require(obs.outcome == 0.0 || obs.outcome == 1.0,
              "Bernoulli outcome must be 0 or 1");
      break;
    case ModelKind::FiniteCategorical: {
      const double k = obs.outcome;
      require(k >= 0.0 && k < num_outcomes_ && k == std::floor(k),
              "categorical outcome outside the alphabet");
      break;
    }
    case ModelKind::GaussianLinear:
      require(std::isfinite(obs.outcome), "Gaussian outcome must be finite");
      break;
  }
}

namespace {

double categorical_log_density(const ModelFamily& model, const Vector& theta,
                               const Vector& x, int outcome) {
  const int d = model.dimension();
  const int k = model.num_outcomes();
  std::vector<double> logits(static_cast<std::size_t>(k), 0.0);
  for (int j = 1; j < k; ++j) {
    logits[static_cast<std::size_t>(j)] = theta.segment((j - 1) * d, d).dot(x);
  }
  return logits[static_cast<std::size_t>(outcome)] - log_sum_exp(logits);
}

}  // namespace

double log_density(const ModelFamily& model, const Vector& theta,
                   const Observation& obs) {
  model.check(theta, obs);
  switch (model.kind()) {
    case ModelKind::GaussianLinear: {
      const double sigma = model.noise_std_for(obs);
      const double r = (obs.outcome - theta.dot(obs.covariate)) / sigma;
      return -0.5 * kLog2Pi - std::log(sigma) - 0.5 * r * r;
    }
    case ModelKind::LogisticBernoulli: {
      const double z = theta.dot(obs.covariate);
      return obs.outcome == 1.0 ? -softplus(-z) : -softplus(z);
    }
    case ModelKind::FiniteCategorical:
      return categorical_log_density(model, theta, obs.covariate,
                                     static_cast<int>(obs.outcome));
  }
  return kNegInf;
}

double neg_log_likelihood(const ModelFamily& model, const Vector& theta,
                          std::span<const Observation> data) {
  double total = 0.0;
  for (const auto& obs : data) total -= log_density(model, theta, obs);
  return total;
}

double sample_outcome(const ModelFamily& model, const Vector& theta,
                      const Vector& covariate, Rng& rng) {
  Observation probe{covariate, 0.0, std::nullopt};
  model.check(theta, probe);
  switch (model.kind()) {
    case ModelKind::GaussianLinear: {
      std::normal_distribution<double> z(0.0, 1.0);
      return theta.dot(covariate) + model.noise_std() * z(rng);
    }
    case ModelKind::LogisticBernoulli: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      return u(rng) < sigmoid(theta.dot(covariate)) ? 1.0 : 0.0;
    }
    case ModelKind::FiniteCategorical: {
      const int k = model.num_outcomes();
      std::vector<double> probs(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) {
        probs[static_cast<std::size_t>(j)] = std::exp(
            categorical_log_density(model, theta, covariate, j));
      }
      std::discrete_distribution<int> pick(probs.begin(), probs.end());
      return static_cast<double>(pick(rng));
    }
  }
  return 0.0;
}

}  // namespace seqmix

#include "seqmix/trackers.hpp"

#include <cmath>

#include "seqmix/kernels.hpp"

namespace seqmix {

MartingaleTracker MartingaleTracker::seq_likelihood_ratio(const ModelFamily& model) {
  return MartingaleTracker(TrackerKind::SeqLikelihoodRatio, model);
}

MartingaleTracker MartingaleTracker::seq_mixing(const ModelFamily& model) {
  return MartingaleTracker(TrackerKind::SeqMixing, model);
}

MartingaleTracker MartingaleTracker::sub_gaussian(int dimension, double sigma) {
  require(sigma > 0.0, "sub-Gaussian tracker: sigma must be positive");
  return MartingaleTracker(TrackerKind::SubGaussian,
                           ModelFamily::gaussian_linear(dimension, sigma));
}

void MartingaleTracker::step(const MixingDistribution& mixing,
                             const Observation& obs) {
  double term = 0.0;
  switch (kind_) {
    case TrackerKind::SeqLikelihoodRatio:
      require(std::holds_alternative<Dirac>(mixing),
              "likelihood-ratio tracker takes a point estimate (Dirac)");
      term = predictive_log_mixture(mixing, model_, obs);
      break;
    case TrackerKind::SeqMixing:
      term = predictive_log_mixture(mixing, model_, obs);
      break;
    case TrackerKind::SubGaussian: {
      // log integral exp(-(<nu,x> - y)^2 / 2 sigma^2) dmu: the Gaussian
      // predictive with its normalizer put back.
      Observation o = obs;
      o.noise_std.reset();
      const double s = model_.noise_std();
      term = predictive_log_mixture(mixing, model_, o) +
             0.5 * (kLog2Pi + 2.0 * std::log(s));
      break;
    }
  }
  if (!(term > kNegInf) || std::isnan(term)) {
    throw DegeneratePosterior(
        "tracker step: observation has zero density under the whole mixture");
  }
  cum_ += term;
  ++steps_;
}

double MartingaleTracker::threshold(double delta) const {
  require_delta(delta);
  return -std::log(delta) - cum_;
}

MartingaleTracker tracker_step(MartingaleTracker tracker,
                               const MixingDistribution& mixing,
                               const Observation& obs) {
  tracker.step(mixing, obs);
  return tracker;
}

double ConfidenceSet::statistic_at(const Vector& theta) const {
  if (statistic == Statistic::NegLogLikelihood) {
    return neg_log_likelihood(model, theta, data);
  }
  double total = 0.0;
  for (const auto& obs : data) {
    model.check(theta, obs);
    const double s = model.noise_std_for(obs);
    const double r = obs.covariate.dot(theta) - obs.outcome;
    total += r * r / (2.0 * s * s);
  }
  return total;
}

bool ConfidenceSet::contains(const Vector& theta) const {
  return statistic_at(theta) <= threshold;
}

std::vector<double> ConfidenceSet::statistic_on(const Matrix& atoms) const {
  std::vector<double> out(static_cast<std::size_t>(atoms.rows()), 0.0);
  if (statistic == Statistic::NegLogLikelihood) {
    for (const auto& obs : data) kernels::accumulate_nll(model, atoms, obs, out);
    return out;
  }
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = statistic_at(atoms.row(i).transpose());
  }
  return out;
}

std::vector<bool> ConfidenceSet::members(const Matrix& atoms) const {
  const auto stat = statistic_on(atoms);
  std::vector<bool> out(stat.size());
  for (std::size_t i = 0; i < stat.size(); ++i) out[i] = stat[i] <= threshold;
  return out;
}

double evidence_threshold(double delta, double log_evidence) {
  require_delta(delta);
  return -std::log(delta) - log_evidence;
}

ConfidenceSet tracker_set(const MartingaleTracker& tracker,
                          std::span<const Observation> data, double delta) {
  require(data.size() == tracker.steps(),
          "tracker_set: data prefix length differs from tracker steps");
  ConfidenceSet c;
  c.delta = delta;
  c.threshold = tracker.threshold(delta);
  c.model = tracker.model();
  c.data = data;
  switch (tracker.kind()) {
    case TrackerKind::SeqLikelihoodRatio:
      c.construction = Construction::SeqLikelihoodRatio;
      break;
    case TrackerKind::SeqMixing:
      c.construction = Construction::SeqMixing;
      break;
    case TrackerKind::SubGaussian:
      c.construction = Construction::SubGaussian;
      c.statistic = Statistic::SquaredLoss;
      break;
  }
  return c;
}

ConfidenceSet prior_mixing_set(const ModelFamily& model,
                               std::span<const Observation> data,
                               const ParameterSpace& space, double delta) {
  ConfidenceSet c;
  c.construction = Construction::PriorMixing;
  c.delta = delta;
  c.threshold = evidence_threshold(delta, grid_log_evidence(model, data, space).log_evidence);
  c.model = model;
  c.data = data;
  return c;
}

ConfidenceSet prior_mixing_set(std::span<const Observation> data,
                               const GaussianPosteriorState& prior, double delta) {
  ConfidenceSet c;
  c.construction = Construction::PriorMixing;
  c.delta = delta;
  c.threshold = evidence_threshold(delta, gaussian_log_evidence(data, prior).log_evidence);
  c.model = ModelFamily::gaussian_linear(prior.dimension(), prior.noise_std);
  c.data = data;
  return c;
}

ConfidenceSet elbo_set(const ModelFamily& model, std::span<const Observation> data,
                       const EvidenceResult& lower_bound, double delta) {
  require(lower_bound.is_lower_bound || lower_bound.method == EvidenceMethod::GaussianClosedForm ||
              lower_bound.method == EvidenceMethod::GridQuadrature,
          "elbo_set: evidence value must be exact or a lower bound");
  ConfidenceSet c;
  c.construction = Construction::ELBO;
  c.delta = delta;
  c.threshold = evidence_threshold(delta, lower_bound.log_evidence);
  c.model = model;
  c.data = data;
  return c;
}

bool prior_posterior_ratio_membership(const Vector& log_prior,
                                      const Vector& log_posterior,
                                      std::size_t index, double delta) {
  require_delta(delta);
  require(log_prior.size() == log_posterior.size(),
          "prior/posterior weight vectors differ in length");
  const auto i = static_cast<Eigen::Index>(index);
  require(i < log_prior.size(), "atom index out of range");
  require(log_prior(i) > kNegInf, "atom has zero prior mass (outside Theta)");
  return -log_posterior(i) <= -std::log(delta) - log_prior(i);
}

double union_bound_threshold(std::size_t m, double delta, double nll_at_estimate) {
  require(m >= 1, "union bound: m must be >= 1");
  require_delta(delta);
  return std::log(static_cast<double>(m) / delta) + nll_at_estimate;
}

double regret_to_confidence_threshold(double delta, double nll_mle, double b_t) {
  require_delta(delta);
  require(b_t >= 0.0, "regret certificate B_t must be nonnegative");
  return -std::log(delta) + nll_mle + b_t;
}

double regret_to_confidence_threshold(double delta, double nll_mle,
                                      const RegretCertificate& certificate,
                                      std::size_t t) {
  return regret_to_confidence_threshold(delta, nll_mle, certificate.value_at(t));
}

double GaussianEllipsoidSet::lhs(const Vector& theta) const {
  const Vector diff = theta - center;
  return 0.5 * diff.dot(precision * diff);
}

double GaussianEllipsoidSet::rhs(const Vector& theta) const {
  const double base = -std::log(delta);
  if (form == EllipsoidForm::Exact) {
    const Vector diff = theta - prior_mean;
    return base + gamma + 0.5 * diff.dot(prior_precision * diff);
  }
  const double d = static_cast<double>(center.size());
  return base + 0.5 * log_det_spd(precision) - 0.5 * d * std::log(lambda) +
         0.5 * lambda * radius * radius;
}

bool GaussianEllipsoidSet::contains(const Vector& theta) const {
  return lhs(theta) <= rhs(theta);
}

GaussianEllipsoidSet rls_ellipsoid(const GaussianPosteriorState& state,
                                   double delta, EllipsoidForm form,
                                   double radius) {
  require_delta(delta);
  GaussianEllipsoidSet e;
  e.form = form;
  e.center = state.mean;
  e.precision = state.precision;
  e.prior_mean = state.prior_mean;
  e.prior_precision = state.prior_precision;
  e.delta = delta;
  e.gamma = state.gamma();
  if (form == EllipsoidForm::BallRelaxed) {
    require(radius > 0.0, "BallRelaxed ellipsoid needs S > 0");
    const double lambda = state.prior_precision(0, 0);
    const Eigen::Index d = state.prior_precision.rows();
    require((state.prior_precision - lambda * Matrix::Identity(d, d)).norm() <= 1e-12 * lambda &&
                state.prior_mean.isZero(0.0),
            "BallRelaxed ellipsoid needs V_0 = lambda I and theta_0 = 0");
    e.radius = radius;
    e.lambda = lambda;
  }
  return e;
}

bool gaussian_ratio_membership(const GaussianPosteriorState& state,
                               const Vector& theta, double delta) {
  require_delta(delta);
  const double d = static_cast<double>(theta.size());
  auto log_normal = [&](const Vector& mean, const Matrix& precision) {
    const Vector diff = theta - mean;
    return -0.5 * d * kLog2Pi + 0.5 * log_det_spd(precision) -
           0.5 * diff.dot(precision * diff);
  };
  const double log_post = log_normal(state.mean, state.precision);
  const double log_prior = log_normal(state.prior_mean, state.prior_precision);
  return -log_post <= -std::log(delta) - log_prior;
}

}  // namespace seqmix

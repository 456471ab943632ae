#include "seqmix/mixing.hpp"

#include <cmath>
#include <vector>

#include "seqmix/kernels.hpp"

namespace seqmix {

FiniteWeights prior_weights(std::shared_ptr<const ParameterSpace> space) {
  require(space && space->size() > 0, "prior_weights: empty space");
  const double mass = space->log_total_mass();
  Vector lw = space->log_prior.array() - mass;
  return {std::move(space), std::move(lw)};
}

FiniteWeights ew_update(const FiniteWeights& weights,
                        std::span<const double> step_log_densities,
                        double eta) {
  require(eta > 0.0 && eta <= 1.0, "ew_update: eta must lie in (0, 1]");
  require(static_cast<Eigen::Index>(step_log_densities.size()) ==
              weights.log_weights.size(),
          "ew_update: length mismatch");
  const std::size_t m = step_log_densities.size();
  std::vector<double> next(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double lw = weights.log_weights(static_cast<Eigen::Index>(i));
    next[i] = lw == kNegInf ? kNegInf : lw + eta * step_log_densities[i];
  }
  const double z = log_sum_exp(next);
  if (!std::isfinite(z)) {
    throw DegeneratePosterior("ew_update: every weight vanished");
  }
  FiniteWeights out{weights.space, Vector(static_cast<Eigen::Index>(m))};
  for (std::size_t i = 0; i < m; ++i) out.log_weights(static_cast<Eigen::Index>(i)) = next[i] - z;
  return out;
}

FiniteWeights finite_posterior(std::shared_ptr<const ParameterSpace> space,
                               const ModelFamily& model,
                               std::span<const Observation> data, double eta) {
  require(eta > 0.0 && eta <= 1.0, "finite_posterior: eta must lie in (0, 1]");
  std::vector<double> nll(space->size(), 0.0);
  for (const auto& obs : data) kernels::accumulate_nll(model, space->atoms, obs, nll);
  std::vector<double> lw(space->size());
  for (std::size_t i = 0; i < lw.size(); ++i) {
    lw[i] = space->log_prior(static_cast<Eigen::Index>(i)) - eta * nll[i];
  }
  const double z = kernels::log_sum_exp(lw);
  if (!std::isfinite(z)) throw DegeneratePosterior("finite_posterior: zero evidence");
  FiniteWeights out{std::move(space), Vector(static_cast<Eigen::Index>(lw.size()))};
  for (std::size_t i = 0; i < lw.size(); ++i) out.log_weights(static_cast<Eigen::Index>(i)) = lw[i] - z;
  return out;
}

GaussianPosteriorState GaussianPosteriorState::prior(const Vector& prior_mean,
                                                     const Matrix& prior_precision,
                                                     double noise_std) {
  require(noise_std > 0.0, "Gaussian posterior: noise_std must be positive");
  require(prior_precision.rows() == prior_mean.size() &&
              prior_precision.cols() == prior_mean.size(),
          "Gaussian posterior: prior dimension mismatch");
  GaussianPosteriorState s;
  s.mean = prior_mean;
  s.precision = prior_precision;
  s.prior_mean = prior_mean;
  s.prior_precision = prior_precision;
  s.noise_std = noise_std;
  s.log_det_V0 = log_det_spd(prior_precision);
  s.info = prior_precision * prior_mean;
  return s;
}

GaussianPosteriorState GaussianPosteriorState::ridge(int d, double lambda,
                                                     double noise_std) {
  require(d >= 1 && lambda > 0.0, "ridge prior: need d >= 1 and lambda > 0");
  return prior(Vector::Zero(d), Matrix::Identity(d, d) * lambda, noise_std);
}

double GaussianPosteriorState::gamma() const {
  return 0.5 * (log_det_spd(precision) - log_det_V0);
}

GaussianPosteriorState gaussian_conjugate_update(
    const GaussianPosteriorState& state, const Observation& obs) {
  require(obs.covariate.size() == state.mean.size(),
          "gaussian_conjugate_update: covariate dimension mismatch");
  const double s = obs.noise_std.value_or(state.noise_std);
  require(s > 0.0, "gaussian_conjugate_update: noise_std must be positive");
  GaussianPosteriorState next = state;
  const double w = 1.0 / (s * s);
  next.precision.noalias() += w * obs.covariate * obs.covariate.transpose();
  next.info.noalias() += (w * obs.outcome) * obs.covariate;
  Eigen::LLT<Matrix> llt(next.precision);
  if (llt.info() != Eigen::Success) {
    throw DegeneratePosterior("gaussian_conjugate_update: precision not SPD");
  }
  next.mean = llt.solve(next.info);
  return next;
}

LaplaceFit laplace_approximate(const ModelFamily& model,
                               std::span<const Observation> data,
                               const ParameterSpace& space,
                               const std::optional<Vector>& warm_start) {
  require(space.radius > 0.0, "laplace_approximate: space needs a radius");
  require(model.kind() != ModelKind::FiniteCategorical,
          "laplace_approximate: model must be Gaussian-linear or logistic");
  const int d = model.dimension();
  LaplaceFit out;
  out.fit = fit_ball_constrained(model, data, space.radius,
                                 warm_start.value_or(Vector::Zero(d)));
  out.map_estimate = out.fit.theta;
  Vector g;
  nll_gradient_hessian(model, data, out.map_estimate, g, out.precision);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.precision, Eigen::EigenvaluesOnly);
  const double trace = out.precision.trace();
  if (!(eig.eigenvalues().minCoeff() > 1e-10 * std::max(1.0, trace))) {
    throw DegeneratePosterior("laplace_approximate: degenerate Hessian");
  }
  out.log_evidence_estimate = -out.fit.objective + 0.5 * d * kLog2Pi -
                              0.5 * log_det_spd(out.precision) -
                              log_ball_volume(d, space.radius);
  return out;
}

namespace {

struct PredictiveVisitor {
  const ModelFamily& model;
  const Observation& obs;

  double operator()(const FiniteWeights& w) const {
    require(w.space && static_cast<Eigen::Index>(w.space->size()) == w.log_weights.size(),
            "predictive_log_mixture: weights do not match their space");
    std::vector<double> terms(w.space->size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double lw = w.log_weights(static_cast<Eigen::Index>(i));
      terms[i] = lw == kNegInf ? kNegInf
                               : lw + log_density(model, w.space->atom(i), obs);
    }
    return log_sum_exp(terms);
  }

  double operator()(const GaussianMixing& g) const {
    if (model.kind() != ModelKind::GaussianLinear) {
      throw UnsupportedCombination(
          "Gaussian mixing needs the Gaussian-linear model; use particles");
    }
    model.check(g.mean, obs);
    Eigen::LLT<Matrix> llt(g.precision);
    if (llt.info() != Eigen::Success) {
      throw DegeneratePosterior("Gaussian mixing precision is not SPD");
    }
    const double s = model.noise_std_for(obs);
    const double var = s * s + obs.covariate.dot(llt.solve(obs.covariate));
    const double r = obs.outcome - obs.covariate.dot(g.mean);
    return -0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var;
  }

  double operator()(const Dirac& d) const { return log_density(model, d.atom, obs); }

  double operator()(const Particles& p) const {
    require(p.atoms.rows() >= 1, "particle mixture needs at least one particle");
    std::vector<double> terms(static_cast<std::size_t>(p.atoms.rows()));
    for (Eigen::Index i = 0; i < p.atoms.rows(); ++i) {
      terms[static_cast<std::size_t>(i)] =
          log_density(model, p.atoms.row(i).transpose(), obs);
    }
    return log_sum_exp(terms) - std::log(static_cast<double>(p.atoms.rows()));
  }
};

}  // namespace

double predictive_log_mixture(const MixingDistribution& mu,
                              const ModelFamily& model, const Observation& obs) {
  return std::visit(PredictiveVisitor{model, obs}, mu);
}

}  // namespace seqmix

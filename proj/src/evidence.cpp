#include "seqmix/evidence.hpp"

#include <cmath>
#include <vector>

#include "seqmix/kernels.hpp"

namespace seqmix {

EvidenceResult grid_log_evidence(const ModelFamily& model,
                                 std::span<const Observation> data,
                                 const ParameterSpace& space) {
  require(space.size() > 0, "grid_log_evidence: empty space");
  std::vector<double> nll(space.size(), 0.0);
  for (const auto& obs : data) kernels::accumulate_nll(model, space.atoms, obs, nll);
  EvidenceResult r;
  r.log_evidence = kernels::log_evidence(nll, space.log_prior);
  r.method = EvidenceMethod::GridQuadrature;
  r.resolution = space.n_per_axis;
  return r;
}

EvidenceResult gaussian_log_evidence(std::span<const Observation> data,
                                     const GaussianPosteriorState& prior) {
  const auto model = ModelFamily::gaussian_linear(prior.dimension(), prior.noise_std);
  GaussianPosteriorState state = prior;
  double total = 0.0;
  for (const auto& obs : data) {
    total += predictive_log_mixture(state.as_mixing(), model, obs);
    state = gaussian_conjugate_update(state, obs);
  }
  EvidenceResult r;
  r.log_evidence = total;
  r.method = EvidenceMethod::GaussianClosedForm;
  return r;
}

namespace {

double kl_finite(const Vector& rho, const Vector& mu) {
  require(rho.size() == mu.size(), "kl_divergence: weight vectors differ in length");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho(i) == kNegInf) continue;
    if (mu(i) == kNegInf) {
      throw std::invalid_argument(
          "kl_divergence: rho is not absolutely continuous w.r.t. mu");
    }
    kl += std::exp(rho(i)) * (rho(i) - mu(i));
  }
  return kl;
}

double kl_gaussian(const GaussianMixing& rho, const GaussianMixing& mu) {
  require(rho.mean.size() == mu.mean.size(), "kl_divergence: dimension mismatch");
  const auto d = static_cast<double>(rho.mean.size());
  Eigen::LLT<Matrix> rho_llt(rho.precision);
  if (rho_llt.info() != Eigen::Success) {
    throw DegeneratePosterior("kl_divergence: precision not SPD");
  }
  const Matrix rho_cov = rho_llt.solve(Matrix::Identity(rho.mean.size(), rho.mean.size()));
  const Vector diff = rho.mean - mu.mean;
  const double tr = (mu.precision * rho_cov).trace();
  const double maha = diff.dot(mu.precision * diff);
  return 0.5 * (tr + maha - d + log_det_spd(rho.precision) - log_det_spd(mu.precision));
}

}  // namespace

EvidenceResult elbo(const FiniteWeights& rho, const ModelFamily& model,
                    std::span<const Observation> data,
                    const ParameterSpace& space) {
  require(static_cast<Eigen::Index>(space.size()) == rho.log_weights.size(),
          "elbo: rho and space have different atom counts");
  std::vector<double> nll(space.size(), 0.0);
  for (const auto& obs : data) kernels::accumulate_nll(model, space.atoms, obs, nll);
  double expected = 0.0;
  for (std::size_t i = 0; i < nll.size(); ++i) {
    const double lw = rho.log_weights(static_cast<Eigen::Index>(i));
    if (lw != kNegInf) expected += std::exp(lw) * nll[i];
  }
  EvidenceResult r;
  r.log_evidence = -expected - kl_finite(rho.log_weights, space.log_prior);
  r.method = EvidenceMethod::ELBOLowerBound;
  r.is_lower_bound = true;
  return r;
}

EvidenceResult elbo(const GaussianMixing& rho, std::span<const Observation> data,
                    const GaussianPosteriorState& prior) {
  require(rho.mean.size() == prior.prior_mean.size(), "elbo: dimension mismatch");
  Eigen::LLT<Matrix> llt(rho.precision);
  if (llt.info() != Eigen::Success) throw DegeneratePosterior("elbo: precision not SPD");
  double expected = 0.0;
  for (const auto& obs : data) {
    require(obs.covariate.size() == rho.mean.size(), "elbo: covariate dimension mismatch");
    const double s = obs.noise_std.value_or(prior.noise_std);
    const double r = obs.outcome - obs.covariate.dot(rho.mean);
    const double v = obs.covariate.dot(llt.solve(obs.covariate));
    expected += 0.5 * (kLog2Pi + 2.0 * std::log(s)) + (r * r + v) / (2.0 * s * s);
  }
  EvidenceResult out;
  out.log_evidence =
      -expected - kl_gaussian(rho, GaussianMixing{prior.prior_mean, prior.prior_precision});
  out.method = EvidenceMethod::ELBOLowerBound;
  out.is_lower_bound = true;
  return out;
}

double kl_divergence(const MixingDistribution& rho, const MixingDistribution& mu) {
  if (const auto* a = std::get_if<FiniteWeights>(&rho)) {
    if (const auto* b = std::get_if<FiniteWeights>(&mu)) {
      return kl_finite(a->log_weights, b->log_weights);
    }
  }
  if (const auto* a = std::get_if<GaussianMixing>(&rho)) {
    if (const auto* b = std::get_if<GaussianMixing>(&mu)) return kl_gaussian(*a, *b);
  }
  throw std::invalid_argument(
      "kl_divergence: needs two finite weight vectors or two Gaussians");
}

}  // namespace seqmix

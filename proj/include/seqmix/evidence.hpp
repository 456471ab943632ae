#pragma once

#include <span>

#include "seqmix/common.hpp"
#include "seqmix/mixing.hpp"
#include "seqmix/models.hpp"
#include "seqmix/spaces.hpp"

namespace seqmix {

enum class EvidenceMethod {
  GridQuadrature,
  GaussianClosedForm,
  LaplaceApprox,
  ELBOLowerBound,
};

struct EvidenceResult {
  double log_evidence = 0.0;
  EvidenceMethod method = EvidenceMethod::GridQuadrature;
  bool is_lower_bound = false;
  int resolution = 0;  // grid points per axis (quadrature only)
};

/// log sum_i exp(log_prior_i - L_t(atom_i)).
EvidenceResult grid_log_evidence(const ModelFamily& model,
                                 std::span<const Observation> data,
                                 const ParameterSpace& space);

/// Exact evidence of the Gaussian-linear model under the Gaussian prior held
/// in `prior`, accumulated as a sum of conjugate predictive log-densities.
EvidenceResult gaussian_log_evidence(std::span<const Observation> data,
                                     const GaussianPosteriorState& prior);

/// -integral L_t drho - KL(rho || mu0) for rho on the atoms of `space`.
EvidenceResult elbo(const FiniteWeights& rho, const ModelFamily& model,
                    std::span<const Observation> data,
                    const ParameterSpace& space);

/// Gaussian rho against the Gaussian prior in `prior` (Gaussian-linear model).
EvidenceResult elbo(const GaussianMixing& rho, std::span<const Observation> data,
                    const GaussianPosteriorState& prior);

/// KL(rho || mu): two weight vectors on one atom set, or two Gaussians.
double kl_divergence(const MixingDistribution& rho, const MixingDistribution& mu);

}  // namespace seqmix

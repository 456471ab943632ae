#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seqmix/common.hpp"
#include "seqmix/models.hpp"
#include "seqmix/spaces.hpp"

namespace seqmix {

struct FitResult {
  Vector theta;
  double objective = 0.0;      // L_t(theta)
  double kkt_residual = 0.0;   // ||theta - P(theta - grad)||
  int iterations = 0;
  bool degenerate = false;     // empty data: theta is the designated center
};

struct NewtonOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-10;
};

/// argmin_z 1/2 z^T H z + c^T z subject to ||z|| <= radius, for symmetric
/// positive semidefinite H.
Vector solve_ball_quadratic(const Matrix& H, const Vector& c, double radius);

/// Gradient and Hessian of L_t at theta (Gaussian-linear or logistic).
void nll_gradient_hessian(const ModelFamily& model,
                          std::span<const Observation> data,
                          const Vector& theta, Vector& gradient,
                          Matrix& hessian);

/// Minimizes L_t over B(0, radius) with damped Newton steps whose subproblem
/// is solved exactly on the ball, plus Armijo backtracking.
FitResult fit_ball_constrained(const ModelFamily& model,
                               std::span<const Observation> data,
                               double radius, const Vector& start,
                               const NewtonOptions& options = {});

/// MLE over the space: atom argmin (finite), normal equations (Gaussian) or
/// ball-constrained Newton (logistic on a ball grid).
FitResult mle_fit(const ModelFamily& model, std::span<const Observation> data,
                  const ParameterSpace& space,
                  const std::optional<Vector>& warm_start = std::nullopt);

/// theta_hat_0 ... theta_hat_t, where theta_hat_s is fitted on the first s
/// observations (warm-started from theta_hat_{s-1}).
std::vector<Vector> running_mle_sequence(
    const ModelFamily& model, std::span<const Observation> data,
    const ParameterSpace& space,
    const std::optional<Vector>& initial = std::nullopt);

enum class CertificateKind {
  LogisticFoster,
  FiniteEW,
  SparseShape,
  UserConstant,
  Empirical,
};

/// Predictable bound B_t >= 0 on the log-regret.
struct RegretCertificate {
  CertificateKind kind = CertificateKind::UserConstant;
  int dimension = 0;
  double radius = 0.0;
  std::size_t num_models = 0;
  double c0 = 0.0;
  int sparsity = 0;
  double constant = 0.0;
  std::vector<double> values;  // Empirical: B_0, B_1, ...

  double value_at(std::size_t t) const;
};

/// 10 d log(e + S t / (2d)).
RegretCertificate logistic_regret_certificate(int d, double S);
/// log m (exponential weights with a uniform prior over m models).
RegretCertificate finite_ew_certificate(std::size_t m);
/// C0 k log t (log t taken as 0 for t <= 1).
RegretCertificate sparse_shape_certificate(double c0, int k);
RegretCertificate constant_certificate(double value);
RegretCertificate empirical_certificate(std::vector<double> values);

struct RegretAudit {
  double lambda_t = 0.0;               // at the final t
  double bound = 0.0;                  // (1/eta) * (-log mu0(best atom))
  std::vector<double> prefix_regret;   // Lambda_1 ... Lambda_t
};

/// Runs exponential weights (Bayes for eta = 1) on a finite space and
/// measures its log-loss regret against the best atom in hindsight.
RegretAudit ew_regret_audit(const ParameterSpace& space,
                            std::span<const Observation> data,
                            const ModelFamily& model, double eta = 1.0);

}  // namespace seqmix

#include "seqmix/online.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seqmix/kernels.hpp"
#include "seqmix/mixing.hpp"

namespace seqmix {

namespace {

Vector project_ball(const Vector& v, double radius) {
  const double n = v.norm();
  if (n <= radius) return v;
  return v * (radius / n);
}

double kkt_residual(const Vector& theta, const Vector& gradient, double radius) {
  return (theta - project_ball(theta - gradient, radius)).norm();
}

}  // namespace

Vector solve_ball_quadratic(const Matrix& H, const Vector& c, double radius) {
  require(radius > 0.0, "solve_ball_quadratic: radius must be positive");
  require(H.rows() == c.size() && H.cols() == c.size(),
          "solve_ball_quadratic: dimension mismatch");
  const Eigen::Index d = c.size();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  Vector lam = eig.eigenvalues().cwiseMax(0.0);
  const Matrix& Q = eig.eigenvectors();
  const Vector ct = Q.transpose() * c;
  const double scale = std::max(1.0, lam.maxCoeff());
  const double tol = 1e-12 * scale;

  // Interior candidate: minimum-norm stationary point when the linear term
  // has no component along the null space.
  bool bounded = true;
  Vector zt(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lam(i) > tol) {
      zt(i) = -ct(i) / lam(i);
    } else {
      if (std::abs(ct(i)) > 1e-14 * std::max(1.0, ct.norm())) bounded = false;
      zt(i) = 0.0;
    }
  }
  if (bounded && zt.norm() <= radius) return Q * zt;

  // Boundary: find mu >= 0 with ||(Lambda + mu)^-1 c~|| = radius.
  auto norm_at = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double den = lam(i) + mu;
      if (den <= 0.0) {
        if (ct(i) != 0.0) return std::numeric_limits<double>::infinity();
        continue;
      }
      s += (ct(i) / den) * (ct(i) / den);
    }
    return std::sqrt(s);
  };
  double lo = 0.0;
  double hi = ct.norm() / radius + 1.0;
  while (norm_at(hi) > radius) hi *= 2.0;
  if (norm_at(lo) <= radius) {
    // Hard case: the null-space component of c vanishes numerically but the
    // interior point is too long; fall back to a scaled minimum-norm point.
    return Q * (zt * (radius / std::max(zt.norm(), radius)));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (norm_at(mid) > radius) lo = mid; else hi = mid;
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const double den = lam(i) + hi;
    zt(i) = den > 0.0 ? -ct(i) / den : 0.0;
  }
  return project_ball(Q * zt, radius);
}

void nll_gradient_hessian(const ModelFamily& model,
                          std::span<const Observation> data,
                          const Vector& theta, Vector& gradient,
                          Matrix& hessian) {
  const int d = model.dimension();
  gradient = Vector::Zero(d);
  hessian = Matrix::Zero(d, d);
  switch (model.kind()) {
    case ModelKind::GaussianLinear:
      for (const auto& obs : data) {
        model.check(theta, obs);
        const double s = model.noise_std_for(obs);
        const double w = 1.0 / (s * s);
        const double r = obs.covariate.dot(theta) - obs.outcome;
        gradient.noalias() += (w * r) * obs.covariate;
        hessian.selfadjointView<Eigen::Lower>().rankUpdate(obs.covariate, w);
      }
      break;
    case ModelKind::LogisticBernoulli:
      for (const auto& obs : data) {
        model.check(theta, obs);
        const double p = sigmoid(obs.covariate.dot(theta));
        gradient.noalias() += (p - obs.outcome) * obs.covariate;
        hessian.selfadjointView<Eigen::Lower>().rankUpdate(obs.covariate,
                                                           p * (1.0 - p));
      }
      break;
    case ModelKind::FiniteCategorical:
      throw UnsupportedCombination(
          "gradient/Hessian not implemented for the categorical model");
  }
  hessian = hessian.selfadjointView<Eigen::Lower>();
}

FitResult fit_ball_constrained(const ModelFamily& model,
                               std::span<const Observation> data,
                               double radius, const Vector& start,
                               const NewtonOptions& options) {
  require(radius > 0.0, "fit_ball_constrained: radius must be positive");
  require(start.size() == model.dimension(),
          "fit_ball_constrained: start has wrong dimension");
  FitResult out;
  out.theta = project_ball(start, radius);
  if (data.empty()) {
    out.theta = Vector::Zero(model.dimension());
    out.degenerate = true;
    return out;
  }
  double f = neg_log_likelihood(model, out.theta, data);
  Vector g;
  Matrix H;
  for (int it = 0; it < options.max_iterations; ++it) {
    nll_gradient_hessian(model, data, out.theta, g, H);
    out.kkt_residual = kkt_residual(out.theta, g, radius);
    out.iterations = it;
    if (out.kkt_residual <= options.gradient_tolerance) break;

    // Model: f + g^T p + 1/2 p^T H p over z = theta + p in the ball.
    const Vector z = solve_ball_quadratic(H, g - H * out.theta, radius);
    const Vector p = z - out.theta;
    const double slope = g.dot(p);
    if (!(slope < 0.0)) break;
    double f_new = f;
    Vector cand;
    bool accepted = false;
    if (-slope > 1e-12 * (1.0 + std::abs(f))) {
      double step = 1.0;
      for (int ls = 0; ls < 60; ++ls) {
        cand = out.theta + step * p;
        f_new = neg_log_likelihood(model, cand, data);
        if (f_new <= f + 1e-4 * step * slope) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
    }
    if (!accepted) {
      // f no longer resolves the predicted decrease; take the full step if
      // it shrinks the residual.
      cand = out.theta + p;
      Vector g_new;
      Matrix H_new;
      nll_gradient_hessian(model, data, cand, g_new, H_new);
      if (!(kkt_residual(cand, g_new, radius) < out.kkt_residual)) break;
      f_new = neg_log_likelihood(model, cand, data);
    }
    out.theta = cand;
    f = f_new;
  }
  nll_gradient_hessian(model, data, out.theta, g, H);
  out.kkt_residual = kkt_residual(out.theta, g, radius);
  out.objective = f;
  const double accept = 1e-7 * std::max<double>(1.0, static_cast<double>(data.size()));
  if (!(out.kkt_residual <= accept)) {
    throw ConvergenceError("ball-constrained Newton did not converge (KKT residual " +
                           std::to_string(out.kkt_residual) + ")");
  }
  return out;
}

namespace {

FitResult finite_argmin(const ModelFamily& model,
                        std::span<const Observation> data,
                        const ParameterSpace& space) {
  std::vector<double> nll(space.size(), 0.0);
  for (const auto& obs : data) kernels::accumulate_nll(model, space.atoms, obs, nll);
  const std::size_t best = kernels::argmin(nll);
  FitResult out;
  out.theta = space.atom(best);
  out.objective = nll[best];
  out.degenerate = data.empty();
  return out;
}

FitResult gaussian_normal_equations(const ModelFamily& model,
                                    std::span<const Observation> data) {
  const int d = model.dimension();
  FitResult out;
  if (data.empty()) {
    out.theta = Vector::Zero(d);
    out.degenerate = true;
    return out;
  }
  Matrix A = Matrix::Identity(d, d) * 1e-10;
  Vector b = Vector::Zero(d);
  for (const auto& obs : data) {
    model.check(Vector::Zero(d), obs);
    const double s = model.noise_std_for(obs);
    const double w = 1.0 / (s * s);
    A.selfadjointView<Eigen::Lower>().rankUpdate(obs.covariate, w);
    b.noalias() += (w * obs.outcome) * obs.covariate;
  }
  A = A.selfadjointView<Eigen::Lower>();
  out.theta = A.ldlt().solve(b);
  out.objective = neg_log_likelihood(model, out.theta, data);
  return out;
}

}  // namespace

FitResult mle_fit(const ModelFamily& model, std::span<const Observation> data,
                  const ParameterSpace& space,
                  const std::optional<Vector>& warm_start) {
  if (space.kind == SpaceKind::Finite) return finite_argmin(model, data, space);
  switch (model.kind()) {
    case ModelKind::GaussianLinear:
      return gaussian_normal_equations(model, data);
    case ModelKind::LogisticBernoulli: {
      const Vector start = warm_start.value_or(Vector::Zero(model.dimension()));
      return fit_ball_constrained(model, data, space.radius, start);
    }
    case ModelKind::FiniteCategorical:
      break;
  }
  throw UnsupportedCombination(
      "mle_fit: categorical model needs a finite parameter space");
}

std::vector<Vector> running_mle_sequence(const ModelFamily& model,
                                         std::span<const Observation> data,
                                         const ParameterSpace& space,
                                         const std::optional<Vector>& initial) {
  std::vector<Vector> seq;
  seq.reserve(data.size() + 1);
  if (initial) {
    seq.push_back(*initial);
  } else {
    seq.push_back(mle_fit(model, data.first(0), space).theta);
  }
  if (space.kind == SpaceKind::Finite) {
    std::vector<double> nll(space.size(), 0.0);
    for (const auto& obs : data) {
      kernels::accumulate_nll(model, space.atoms, obs, nll);
      seq.push_back(space.atom(kernels::argmin(nll)));
    }
    return seq;
  }
  for (std::size_t s = 1; s <= data.size(); ++s) {
    seq.push_back(mle_fit(model, data.first(s), space, seq.back()).theta);
  }
  return seq;
}

double RegretCertificate::value_at(std::size_t t) const {
  const double tt = static_cast<double>(t);
  switch (kind) {
    case CertificateKind::LogisticFoster:
      return 10.0 * dimension *
             std::log(std::numbers::e + radius * tt / (2.0 * dimension));
    case CertificateKind::FiniteEW:
      return std::log(static_cast<double>(num_models));
    case CertificateKind::SparseShape:
      return t <= 1 ? 0.0 : c0 * sparsity * std::log(tt);
    case CertificateKind::UserConstant:
      return constant;
    case CertificateKind::Empirical:
      if (values.empty()) return 0.0;
      return values[std::min(t, values.size() - 1)];
  }
  return 0.0;
}

RegretCertificate logistic_regret_certificate(int d, double S) {
  require(d >= 1, "logistic certificate: d must be >= 1");
  require(S > 0.0, "logistic certificate: S must be positive");
  RegretCertificate c;
  c.kind = CertificateKind::LogisticFoster;
  c.dimension = d;
  c.radius = S;
  return c;
}

RegretCertificate finite_ew_certificate(std::size_t m) {
  require(m >= 1, "finite EW certificate: m must be >= 1");
  RegretCertificate c;
  c.kind = CertificateKind::FiniteEW;
  c.num_models = m;
  return c;
}

RegretCertificate sparse_shape_certificate(double c0, int k) {
  require(c0 >= 0.0 && k >= 0, "sparse certificate: C0 and k must be >= 0");
  RegretCertificate c;
  c.kind = CertificateKind::SparseShape;
  c.c0 = c0;
  c.sparsity = k;
  return c;
}

RegretCertificate constant_certificate(double value) {
  require(value >= 0.0, "regret certificate must be nonnegative");
  RegretCertificate c;
  c.kind = CertificateKind::UserConstant;
  c.constant = value;
  return c;
}

RegretCertificate empirical_certificate(std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(values[i] >= 0.0, "empirical certificate values must be >= 0");
    require(i == 0 || values[i] >= values[i - 1],
            "empirical certificate values must be nondecreasing");
  }
  RegretCertificate c;
  c.kind = CertificateKind::Empirical;
  c.values = std::move(values);
  return c;
}

RegretAudit ew_regret_audit(const ParameterSpace& space,
                            std::span<const Observation> data,
                            const ModelFamily& model, double eta) {
  require(space.kind == SpaceKind::Finite,
          "ew_regret_audit: parameter space must be finite");
  require(eta > 0.0 && eta <= 1.0, "ew_regret_audit: eta must lie in (0, 1]");
  const std::size_t m = space.size();
  const double log_mass = space.log_total_mass();
  FiniteWeights w{std::make_shared<const ParameterSpace>(space),
                  space.log_prior.array() - log_mass};
  std::vector<double> nll(m, 0.0);
  std::vector<double> step(m);
  double cum_loss = 0.0;
  RegretAudit audit;
  audit.prefix_regret.reserve(data.size());
  for (const auto& obs : data) {
    for (std::size_t i = 0; i < m; ++i) step[i] = log_density(model, space.atom(i), obs);
    // Mixture log-loss under mu_{s-1}.
    std::vector<double> terms(m);
    for (std::size_t i = 0; i < m; ++i) terms[i] = w.log_weights(static_cast<Eigen::Index>(i)) + step[i];
    cum_loss -= log_sum_exp(terms);
    for (std::size_t i = 0; i < m; ++i) nll[i] -= step[i];
    w = ew_update(w, step, eta);
    audit.prefix_regret.push_back(cum_loss - *std::min_element(nll.begin(), nll.end()));
  }
  audit.lambda_t = audit.prefix_regret.empty() ? 0.0 : audit.prefix_regret.back();
  const std::size_t best = kernels::argmin(nll);
  audit.bound = -(space.log_prior(static_cast<Eigen::Index>(best)) - log_mass) / eta;
  return audit;
}

}  // namespace seqmix

#include "seqmix/bandit.hpp"

#include <cmath>
#include <limits>

#include "seqmix/kernels.hpp"
#include "seqmix/mixing.hpp"
#include "seqmix/models.hpp"
#include "seqmix/online.hpp"
#include "seqmix/trackers.hpp"

namespace seqmix {

std::string_view method_name(BanditMethod m) {
  switch (m) {
    case BanditMethod::MQ: return "MQ";
    case BanditMethod::PL: return "PL";
    case BanditMethod::EMK: return "EMK";
    case BanditMethod::Oracle: return "Oracle";
  }
  return "?";
}

std::optional<BanditMethod> parse_method(std::string_view name) {
  for (auto m : {BanditMethod::MQ, BanditMethod::PL, BanditMethod::EMK,
                 BanditMethod::Oracle}) {
    if (name == method_name(m)) return m;
  }
  return std::nullopt;
}

void BanditConfig::validate() const {
  require(d >= 1 && d <= 3, "bandit: d must be 1, 2 or 3");
  require(S > 1.0, "bandit: S must exceed 1");
  require(horizon >= 1, "bandit: horizon must be >= 1");
  require(n_arms >= 2, "bandit: n_arms must be >= 2");
  require(delta > 0.0 && delta < 1.0, "bandit: delta must lie in (0, 1)");
  require(grid_n >= 3, "bandit: grid_n must be >= 3");
}

Vector BanditConfig::theta_star() const {
  return Vector::Constant(d, (S - 1.0) / std::sqrt(static_cast<double>(d)));
}

double BanditTrace::mean_width() const {
  if (steps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : steps) total += s.width;
  return total / static_cast<double>(steps.size());
}

bool BanditTrace::always_covered() const {
  for (const auto& s : steps) {
    if (!s.covered) return false;
  }
  return true;
}

double env_step(const Vector& theta_star, const Vector& arm, Rng& rng) {
  require(theta_star.size() == arm.size(), "env_step: dimension mismatch");
  return uniform01(rng) < sigmoid(arm.dot(theta_star)) ? 1.0 : 0.0;
}

namespace {

std::size_t argmax_lowest(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

UcbChoice choose_from_scan(const Matrix& arms, const kernels::MemberScan& scan,
                           const Matrix& atoms, std::span<const double> statistic) {
  UcbChoice c;
  if (scan.members == 0) {
    const Vector point = atoms.row(static_cast<Eigen::Index>(kernels::argmin(statistic))).transpose();
    c.fallback = true;
    c.optimistic.resize(static_cast<std::size_t>(arms.rows()));
    for (Eigen::Index k = 0; k < arms.rows(); ++k) {
      c.optimistic[static_cast<std::size_t>(k)] = arms.row(k).dot(point);
    }
  } else {
    c.optimistic = scan.best_inner;
  }
  c.arm = argmax_lowest(c.optimistic);
  return c;
}

struct OracleVisitor {
  const Matrix& arms;

  UcbChoice operator()(const GridSetOracle& g) const {
    require(g.atoms != nullptr, "grid oracle without atoms");
    const auto scan = kernels::scan_members(*g.atoms, g.statistic, g.threshold, arms);
    return choose_from_scan(arms, scan, *g.atoms, g.statistic);
  }

  UcbChoice operator()(const EllipsoidSetOracle& e) const {
    UcbChoice c;
    c.optimistic.resize(static_cast<std::size_t>(arms.rows()));
    for (Eigen::Index k = 0; k < arms.rows(); ++k) {
      const Vector a = arms.row(k).transpose();
      double value;
      if (e.whole_ball) {
        value = e.ball_radius * a.norm();
      } else if (e.radius < 0.0) {
        value = a.dot(e.center);
        c.fallback = true;
      } else {
        value = a.dot(max_inner_ellipsoid_ball(a, e.center, e.precision, e.radius,
                                               e.ball_radius));
      }
      c.optimistic[static_cast<std::size_t>(k)] = value;
    }
    c.arm = argmax_lowest(c.optimistic);
    return c;
  }

  UcbChoice operator()(const PointSetOracle& p) const {
    UcbChoice c;
    c.optimistic.resize(static_cast<std::size_t>(arms.rows()));
    for (Eigen::Index k = 0; k < arms.rows(); ++k) {
      c.optimistic[static_cast<std::size_t>(k)] = arms.row(k).dot(p.theta);
    }
    c.arm = argmax_lowest(c.optimistic);
    return c;
  }
};

}  // namespace

Vector max_inner_ellipsoid_ball(const Vector& a, const Vector& center, const Matrix& H,
                                double radius, double ball_radius) {
  require(radius >= 0.0, "max_inner_ellipsoid_ball: negative radius");
  // theta = center + L z with L = H^{-1/2}; the ellipsoid is |z| <= sqrt(2 r).
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  require(eig.eigenvalues().minCoeff() > 0.0, "max_inner_ellipsoid_ball: H must be SPD");
  const Matrix L = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                   eig.eigenvectors().transpose();
  const double z_radius = std::sqrt(2.0 * radius);
  const Vector La = L * a;
  // For a multiplier nu on |theta|^2 the inner problem is
  //   min_z  nu |center + L z|^2 - <a, center + L z>  over |z| <= z_radius.
  auto theta_at = [&](double nu) -> Vector {
    if (nu == 0.0) {
      const double n = La.norm();
      return n > 0.0 ? Vector(center + L * (La * (z_radius / n))) : center;
    }
    const Matrix Q = 2.0 * nu * L * L;
    const Vector lin = 2.0 * nu * (L * center) - La;
    return center + L * solve_ball_quadratic(Q, lin, z_radius);
  };
  Vector theta = theta_at(0.0);
  if (ball_radius <= 0.0 || theta.norm() <= ball_radius) return theta;
  double lo = 0.0, hi = 1.0;
  while (theta_at(hi).norm() > ball_radius && hi < 1e300) hi *= 4.0;
  for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (theta_at(mid).norm() > ball_radius) lo = mid; else hi = mid;
  }
  theta = theta_at(hi);
  const double n = theta.norm();
  if (n > ball_radius) theta *= ball_radius / n;
  return theta;
}

UcbChoice ucb_select(const Matrix& arms, const SetOracle& oracle) {
  require(arms.rows() >= 1, "ucb_select: empty arm set");
  return std::visit(OracleVisitor{arms}, oracle);
}

BanditTrace run_episode(const BanditConfig& config, const ParameterSpace* grid) {
  config.validate();
  const int d = config.d;
  const double S = config.S;
  const Vector theta_star = config.theta_star();
  const auto model = ModelFamily::logistic(d);
  const BanditMethod method = config.method;
  const bool uses_grid = method != BanditMethod::Oracle;

  ParameterSpace own_grid;
  if (uses_grid && grid == nullptr) {
    own_grid = ball_grid(d, S, config.grid_n);
    grid = &own_grid;
  }
  if (uses_grid) {
    require(grid->dimension() == d && std::abs(grid->radius - S) <= 1e-12,
            "run_episode: grid does not match the config");
  }

  // Common random numbers: every method sees the same arm sets and the same
  // reward uniforms for a given seed.
  Rng arm_rng(child_seed(config.seed, 0, "arms"));
  Rng reward_rng(child_seed(config.seed, 0, "rewards"));

  const double log_inv_delta = -std::log(config.delta);
  std::vector<Observation> data;
  data.reserve(static_cast<std::size_t>(config.horizon));
  std::vector<double> nll(uses_grid ? grid->size() : 0, 0.0);
  std::vector<double> stat(uses_grid ? grid->size() : 0, 0.0);
  double nll_star = 0.0;

  auto tracker = MartingaleTracker::seq_likelihood_ratio(model);
  Vector estimate = Vector::Zero(d);  // EMK running MLE / PL warm start

  BanditTrace trace;
  trace.method = method;
  trace.steps.reserve(static_cast<std::size_t>(config.horizon));
  Matrix arms(config.n_arms, d);
  double cum = 0.0;

  for (int t = 0; t < config.horizon; ++t) {
    for (int k = 0; k < config.n_arms; ++k) {
      Vector a = uniform_ball_sample(d, S, arm_rng);
      if (config.normalize_arms) a /= S;
      arms.row(k) = a.transpose();
    }

    BanditStep step;
    UcbChoice choice;
    switch (method) {
      case BanditMethod::MQ:
      case BanditMethod::EMK: {
        step.threshold = method == BanditMethod::MQ
                             ? log_inv_delta - kernels::log_evidence(nll, grid->log_prior)
                             : tracker.threshold(config.delta);
        const auto scan = kernels::scan_members(grid->atoms, nll, step.threshold, arms);
        choice = choose_from_scan(arms, scan, grid->atoms, nll);
        step.members = scan.members;
        step.width = scan.width();
        step.covered = nll_star <= step.threshold;
        break;
      }
      case BanditMethod::PL: {
        EllipsoidSetOracle ell;
        ell.ball_radius = S;
        ell.center = estimate;
        bool degenerate = data.empty();
        if (!degenerate) {
          try {
            const LaplaceFit fit = laplace_approximate(model, data, *grid, estimate);
            estimate = fit.map_estimate;
            ell.center = fit.map_estimate;
            ell.precision = fit.precision;
            ell.radius = log_inv_delta + 0.5 * log_det_spd(fit.precision) -
                         0.5 * d * kLog2Pi + log_ball_volume(d, S);
          } catch (const DegeneratePosterior&) {
            degenerate = true;
          }
        }
        if (degenerate) {
          ell.whole_ball = true;
          step.threshold = std::numeric_limits<double>::infinity();
          std::fill(stat.begin(), stat.end(), 0.0);
          const auto scan = kernels::scan_members(grid->atoms, stat, 0.0, arms);
          step.members = scan.members;
          step.width = scan.width();
          step.covered = true;
        } else {
          step.threshold = ell.radius;
          kernels::quadratic_form(grid->atoms, ell.center, ell.precision, stat);
          const auto scan = kernels::scan_members(grid->atoms, stat, ell.radius, arms);
          step.members = scan.members;
          step.width = scan.width();
          const Vector diff = theta_star - ell.center;
          step.covered = 0.5 * diff.dot(ell.precision * diff) <= ell.radius;
        }
        choice = ucb_select(arms, ell);
        break;
      }
      case BanditMethod::Oracle:
        choice = ucb_select(arms, PointSetOracle{theta_star});
        break;
    }

    const Vector arm = arms.row(static_cast<Eigen::Index>(choice.arm)).transpose();
    const double reward = env_step(theta_star, arm, reward_rng);
    double best = -1.0;
    for (int k = 0; k < config.n_arms; ++k) {
      best = std::max(best, sigmoid(arms.row(k).dot(theta_star)));
    }
    step.arm = choice.arm;
    step.reward = reward;
    step.regret = std::max(0.0, best - sigmoid(arm.dot(theta_star)));
    cum += step.regret;
    step.cum_regret = cum;
    step.fallback = choice.fallback;
    if (choice.fallback) ++trace.fallback_steps;
    trace.steps.push_back(step);

    Observation obs{arm, reward, std::nullopt};
    if (method == BanditMethod::MQ || method == BanditMethod::EMK) {
      kernels::accumulate_nll(model, grid->atoms, obs, nll);
      nll_star -= log_density(model, theta_star, obs);
    }
    if (method == BanditMethod::EMK) tracker.step(Dirac{estimate}, obs);
    data.push_back(std::move(obs));
    if (method == BanditMethod::EMK) {
      estimate = fit_ball_constrained(model, data, S, estimate).theta;
    }
  }
  return trace;
}

}  // namespace seqmix

#include "seqmix/spaces.hpp"

#include <random>

namespace seqmix {

double ParameterSpace::log_total_mass() const {
  return log_sum_exp(std::span<const double>(log_prior.data(),
                                             static_cast<std::size_t>(log_prior.size())));
}

ParameterSpace make_finite(const std::vector<Vector>& atoms,
                           std::span<const double> prior_weights) {
  require(!atoms.empty(), "finite parameter space needs at least one atom");
  require(prior_weights.size() == atoms.size(),
          "prior weights and atoms differ in length");
  const auto d = atoms.front().size();
  ParameterSpace space;
  space.kind = SpaceKind::Finite;
  space.atoms.resize(static_cast<Eigen::Index>(atoms.size()), d);
  space.log_prior.resize(static_cast<Eigen::Index>(atoms.size()));
  double total = 0.0;
  for (double w : prior_weights) {
    require(w > 0.0 && std::isfinite(w), "prior weights must be positive");
    total += w;
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    require(atoms[i].size() == d, "atoms differ in dimension");
    const auto row = static_cast<Eigen::Index>(i);
    space.atoms.row(row) = atoms[i].transpose();
    space.log_prior[row] = std::log(prior_weights[i] / total);
  }
  return space;
}

double log_ball_volume(int d, double S) {
  require(d >= 1 && S > 0.0, "ball volume needs d >= 1 and S > 0");
  const double half_d = 0.5 * d;
  return half_d * std::log(M_PI) - std::lgamma(half_d + 1.0) + d * std::log(S);
}

namespace {

ParameterSpace tensor_ball_grid(int d, double S, int n) {
  require(d >= 1 && d <= 3, "grid quadrature supports d in {1, 2, 3}");
  require(S > 0.0, "ball radius must be positive");
  require(n >= 3, "n_per_axis must be at least 3");
  const double h = 2.0 * S / (n - 1);
  const double limit = S + 1e-12;

  std::vector<double> coords;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(n);
  std::vector<double> point(static_cast<std::size_t>(d));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double norm2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const auto idx = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
      // Symmetric construction keeps the origin exact for odd n.
      const double v = (2 * idx - (n - 1)) * 0.5 * h;
      point[static_cast<std::size_t>(k)] = v;
      norm2 += v * v;
    }
    if (std::sqrt(norm2) <= limit) {
      coords.insert(coords.end(), point.begin(), point.end());
    }
  }

  ParameterSpace space;
  space.kind = SpaceKind::BallGrid;
  space.radius = S;
  space.n_per_axis = n;
  space.cell_volume = std::pow(h, d);
  const auto m = static_cast<Eigen::Index>(coords.size() / static_cast<std::size_t>(d));
  space.atoms.resize(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int k = 0; k < d; ++k) {
      space.atoms(i, k) = coords[static_cast<std::size_t>(i * d + k)];
    }
  }
  return space;
}

// Scales weights down so that the total mass never exceeds one.
void cap_total_mass(ParameterSpace& space) {
  const double log_mass = space.log_total_mass();
  if (log_mass > 0.0) space.log_prior.array() -= log_mass;
}

}  // namespace

ParameterSpace ball_grid(int d, double S, int n_per_axis) {
  ParameterSpace space = tensor_ball_grid(d, S, n_per_axis);
  const double log_vol = log_ball_volume(d, S);
  space.prior_density = std::exp(-log_vol);
  space.log_prior = Vector::Constant(space.atoms.rows(),
                                     std::log(space.cell_volume) - log_vol);
  cap_total_mass(space);
  return space;
}

ParameterSpace ball_grid_with_log_density(
    int d, double S, int n_per_axis,
    const std::function<double(const Vector&)>& log_density) {
  ParameterSpace space = tensor_ball_grid(d, S, n_per_axis);
  const double log_cell = std::log(space.cell_volume);
  space.log_prior.resize(space.atoms.rows());
  for (Eigen::Index i = 0; i < space.atoms.rows(); ++i) {
    space.log_prior[i] = log_density(space.atoms.row(i).transpose()) + log_cell;
  }
  cap_total_mass(space);
  return space;
}

Vector uniform_ball_sample(int d, double S, Rng& rng) {
  require(d >= 1 && S > 0.0, "uniform_ball_sample needs d >= 1 and S > 0");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector v(d);
  double norm = 0.0;
  do {
    for (int k = 0; k < d; ++k) v[k] = gauss(rng);
    norm = v.norm();
  } while (norm == 0.0);
  const double r = S * std::pow(unif(rng), 1.0 / d);
  return v * (r / norm);
}

}  // namespace seqmix

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "seqmix/common.hpp"
#include "seqmix/rng.hpp"

namespace seqmix {

enum class SpaceKind {
  Finite,    // an explicit finite Theta
  BallGrid,  // quadrature grid standing in for the continuous ball B(0, S)
};

/// Parameter set with prior log-weights. Atoms are stored one per row.
/// For grids, log_prior folds the cell volume into the weight, so the
/// weights are a Riemann approximation of the prior density on the ball.
/// Total prior mass may be below one (sub-probability priors are allowed).
struct ParameterSpace {
  SpaceKind kind = SpaceKind::Finite;
  Matrix atoms;
  Vector log_prior;
  double radius = 0.0;
  int n_per_axis = 0;
  double cell_volume = 0.0;
  double prior_density = 0.0;  // 1 / vol(B(0,S)) for uniform ball grids

  int dimension() const { return static_cast<int>(atoms.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(atoms.rows()); }
  Vector atom(std::size_t i) const {
    return atoms.row(static_cast<Eigen::Index>(i)).transpose();
  }
  double log_total_mass() const;
};

ParameterSpace make_finite(const std::vector<Vector>& atoms,
                           std::span<const double> prior_weights);

/// Uniform prior on B(0, S) via a tensor grid on [-S, S]^d (d <= 3).
ParameterSpace ball_grid(int d, double S, int n_per_axis);

/// Ball grid whose weights come from an arbitrary prior log-density
/// (e.g. a Gaussian prior truncated to a large ball).
ParameterSpace ball_grid_with_log_density(
    int d, double S, int n_per_axis,
    const std::function<double(const Vector&)>& log_density);

double log_ball_volume(int d, double S);

Vector uniform_ball_sample(int d, double S, Rng& rng);

}  // namespace seqmix

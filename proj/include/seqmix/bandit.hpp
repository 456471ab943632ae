#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "seqmix/common.hpp"
#include "seqmix/rng.hpp"
#include "seqmix/spaces.hpp"

namespace seqmix {

enum class BanditMethod { MQ, PL, EMK, Oracle };

std::string_view method_name(BanditMethod m);
std::optional<BanditMethod> parse_method(std::string_view name);

struct BanditConfig {
  int d = 2;
  double S = 4.0;
  int horizon = 1000;
  int n_arms = 10;
  double delta = 0.05;
  BanditMethod method = BanditMethod::MQ;
  std::uint64_t seed = 0;
  int grid_n = 201;
  bool normalize_arms = false;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  /// ((S - 1)/sqrt d, ..., (S - 1)/sqrt d).
  Vector theta_star() const;
};

struct BanditStep {
  std::size_t arm = 0;
  double reward = 0.0;
  double regret = 0.0;      // instantaneous, against the best arm of the round
  double cum_regret = 0.0;
  double threshold = 0.0;   // beta_t (MQ, EMK) or ellipsoid radius (PL)
  double width = 0.0;       // extent of theta_1 over member grid atoms
  std::size_t members = 0;  // member grid atoms
  bool covered = true;      // theta* in C_t (before the round's observation)
  bool fallback = false;    // empty set, played the point estimate
};

struct BanditTrace {
  BanditMethod method = BanditMethod::MQ;
  std::vector<BanditStep> steps;
  std::size_t fallback_steps = 0;

  double final_regret() const { return steps.empty() ? 0.0 : steps.back().cum_regret; }
  double mean_width() const;
  bool always_covered() const;
};

/// Reward ~ Ber(sigmoid(<arm, theta*>)).
double env_step(const Vector& theta_star, const Vector& arm, Rng& rng);

/// Atoms with statistic <= threshold. Empty sets fall back to the atom with
/// the smallest statistic.
struct GridSetOracle {
  const Matrix* atoms = nullptr;
  std::span<const double> statistic;
  double threshold = 0.0;
};

/// {theta : 1/2 |theta - center|_H^2 <= radius} intersected with B(0, ball_radius).
/// A negative radius means the point {center}; `whole_ball` means B(0, S).
struct EllipsoidSetOracle {
  Vector center;
  Matrix precision;
  double radius = 0.0;
  double ball_radius = 0.0;
  bool whole_ball = false;
};

struct PointSetOracle {
  Vector theta;
};

using SetOracle = std::variant<GridSetOracle, EllipsoidSetOracle, PointSetOracle>;

struct UcbChoice {
  std::size_t arm = 0;
  bool fallback = false;
  std::vector<double> optimistic;  // max over the set of <theta, arm_k>
};

/// argmax <a, theta> over {1/2 |theta - center|_H^2 <= radius} intersected
/// with B(0, ball_radius) (no ball when ball_radius <= 0). The center must
/// lie in the ball.
Vector max_inner_ellipsoid_ball(const Vector& a, const Vector& center, const Matrix& H,
                                double radius, double ball_radius);

/// argmax_k max_{theta in C} <theta, arm_k>, ties to the lowest index.
/// `arms` holds one arm per row.
UcbChoice ucb_select(const Matrix& arms, const SetOracle& oracle);

/// One UCB episode. `grid` is the ball grid for MQ/EMK/PL width scans; when
/// null a grid is built from the config.
BanditTrace run_episode(const BanditConfig& config,
                        const ParameterSpace* grid = nullptr);

}  // namespace seqmix

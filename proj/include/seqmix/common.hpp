#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

namespace seqmix {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.83787706640934548356065947281;

/// log(1 + e^x), finite for every finite x.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double log_sigmoid(double z) { return -softplus(-z); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Numerically stable log(sum(exp(v))). Returns -inf for an empty span or
/// when every entry is -inf.
double log_sum_exp(std::span<const double> values);

inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// log det of a symmetric positive definite matrix; throws if Cholesky fails.
double log_det_spd(const Matrix& m);

// Error types. Precondition violations throw std::invalid_argument.

/// A posterior or mixture lost all mass (every weight -inf) or is not
/// representable (singular curvature where a Gaussian is needed).
class DegeneratePosterior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested combination of model and mixing representation has no
/// implementation (e.g. Gaussian mixing with a Bernoulli likelihood).
class UnsupportedCombination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void require_delta(double delta) {
  require(delta > 0.0 && delta <= 1.0, "delta must lie in (0, 1]");
}

}  // namespace seqmix

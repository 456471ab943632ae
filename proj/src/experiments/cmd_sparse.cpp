#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "seqmix/evidence.hpp"
#include "seqmix/experiments.hpp"
#include "seqmix/mixing.hpp"
#include "seqmix/online.hpp"

namespace seqmix::exp {

Vector chebyshev_features(double x, int d) {
  Vector phi(d);
  for (int i = 0; i < d; ++i) {
    if (i == 0) phi(i) = 1.0;
    else if (i == 1) phi(i) = x;
    else phi(i) = 2.0 * x * phi(i - 1) - phi(i - 2);
  }
  return phi;
}

SparseConfig SparseConfig::from(const Config& c) {
  c.check_keys({"experiment", "d", "k", "n", "noise_std", "lambda", "radius_sq", "runs",
                "delta", "seed", "out"});
  SparseConfig k;
  k.d = static_cast<int>(c.get_int("d", k.d));
  k.k = static_cast<int>(c.get_int("k", k.k));
  k.n = static_cast<int>(c.get_int("n", k.n));
  k.noise_std = c.get_double("noise_std", k.noise_std);
  k.lambda = c.get_double("lambda", k.lambda);
  k.radius_sq = c.get_double("radius_sq", k.radius_sq);
  k.runs = static_cast<int>(c.get_int("runs", k.runs));
  k.delta = c.get_double("delta", k.delta);
  k.seed = c.get_uint("seed", k.seed);
  k.out = c.get_string("out", k.out.string());
  k.validate();
  return k;
}

void SparseConfig::validate() const {
  if (k < 1 || k > 2) throw ConfigError("k must be 1 or 2");
  if (d < k) throw ConfigError("d must be >= k");
  if (n < 1) throw ConfigError("n must be >= 1");
  if (!(noise_std > 0.0)) throw ConfigError("noise_std must be positive");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(radius_sq > 0.0)) throw ConfigError("radius_sq must be positive");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
}

namespace {

using Support = std::vector<int>;

/// All supports of size exactly `size` (lexicographic).
std::vector<Support> supports_of_size(int d, int size) {
  std::vector<Support> out;
  if (size == 1) {
    for (int i = 0; i < d; ++i) out.push_back({i});
  } else {
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) out.push_back({i, j});
  }
  return out;
}

std::vector<Support> supports_up_to(int d, int k) {
  std::vector<Support> out;
  for (int s = 1; s <= k; ++s) {
    const auto part = supports_of_size(d, s);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Matrix columns(const Matrix& features, const Support& support) {
  Matrix out(features.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = features.col(support[j]);
  return out;
}

/// argmin 1/2 |F z - y|^2 subject to |z|^2 <= radius_sq.
Vector ball_least_squares(const Matrix& F, const Vector& y, double radius_sq) {
  const Matrix H = F.transpose() * F;
  const Vector c = -(F.transpose() * y);
  return solve_ball_quadratic(H, c, std::sqrt(radius_sq));
}

/// Best (smallest residual) ball-constrained fit over supports of size <= k.
Vector sparse_least_squares(const Matrix& F, const Vector& y, int k, double radius_sq) {
  Vector best = Vector::Zero(F.cols());
  double best_loss = 0.5 * y.squaredNorm();
  for (const auto& support : supports_up_to(static_cast<int>(F.cols()), k)) {
    const Matrix Fs = columns(F, support);
    const Vector z = ball_least_squares(Fs, y, radius_sq);
    const double loss = 0.5 * (Fs * z - y).squaredNorm();
    if (loss < best_loss) {
      best_loss = loss;
      best.setZero();
      for (std::size_t j = 0; j < support.size(); ++j) best(support[j]) = z(static_cast<Eigen::Index>(j));
    }
  }
  return best;
}

double gaussian_log_pdf(double y, double mean, double sigma) {
  const double r = (y - mean) / sigma;
  return -0.5 * kLog2Pi - std::log(sigma) - 0.5 * r * r;
}

/// Sum of log-predictive densities of the running estimators.
double plug_in_log_predictive(const Matrix& F, const Vector& y, double sigma, bool sparse,
                              int k, double radius_sq) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < F.rows(); ++s) {
    Vector estimate = Vector::Zero(F.cols());
    if (s > 0) {
      const Matrix past = F.topRows(s);
      const Vector ys = y.head(s);
      estimate = sparse ? sparse_least_squares(past, ys, k, radius_sq)
                        : ball_least_squares(past, ys, radius_sq);
    }
    total += gaussian_log_pdf(y(s), F.row(s).dot(estimate), sigma);
  }
  return total;
}

double log_evidence_on(const Matrix& F, const Vector& y, double sigma, double lambda) {
  std::vector<Observation> data;
  data.reserve(static_cast<std::size_t>(F.rows()));
  for (Eigen::Index s = 0; s < F.rows(); ++s) {
    data.push_back({F.row(s).transpose(), y(s), std::nullopt});
  }
  const auto prior = GaussianPosteriorState::ridge(static_cast<int>(F.cols()), lambda, sigma);
  return gaussian_log_evidence(data, prior).log_evidence;
}

struct Band {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  bool unbounded = false;
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return lo > hi; }
};

/// Coordinate bands of {theta : |theta|_0 <= k, L(theta) <= threshold} with
/// L(theta) = |F theta - y|^2 / (2 sigma^2) + n/2 log(2 pi sigma^2).
std::vector<Band> coordinate_bands(const Matrix& F, const Vector& y, double sigma, int k,
                                   double threshold) {
  const int d = static_cast<int>(F.cols());
  const double n = static_cast<double>(F.rows());
  const double s2 = sigma * sigma;
  const double c = y.squaredNorm() / (2.0 * s2) + 0.5 * n * (kLog2Pi + std::log(s2));
  std::vector<Band> bands(static_cast<std::size_t>(d));
  std::vector<bool> zero_reachable(static_cast<std::size_t>(d), false);
  for (const auto& support : supports_of_size(d, k)) {
    const Matrix Fs = columns(F, support);
    const Matrix A = Fs.transpose() * Fs / s2;
    const Vector b = Fs.transpose() * y / s2;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
    const bool singular = eig.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, A.trace());
    if (singular) {
      for (int i : support) bands[static_cast<std::size_t>(i)].unbounded = true;
      continue;
    }
    const Matrix A_inv = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                         eig.eigenvectors().transpose();
    const Vector z0 = A_inv * b;
    const double r = threshold - (c - 0.5 * b.dot(z0));
    if (r < 0.0) continue;
    for (std::size_t j = 0; j < support.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double half = std::sqrt(2.0 * r * A_inv(jj, jj));
      auto& band = bands[static_cast<std::size_t>(support[j])];
      band.add(z0(jj) - half);
      band.add(z0(jj) + half);
    }
    for (int i = 0; i < d; ++i) {
      if (std::find(support.begin(), support.end(), i) == support.end()) {
        zero_reachable[static_cast<std::size_t>(i)] = true;
      }
    }
  }
  for (int i = 0; i < d; ++i) {
    if (zero_reachable[static_cast<std::size_t>(i)]) bands[static_cast<std::size_t>(i)].add(0.0);
  }
  return bands;
}

SparseRun sparse_run(const SparseConfig& cfg, std::uint64_t run) {
  Rng rng(child_seed(cfg.seed, run, "sparse"));
  const int d = cfg.d;
  Vector theta_star = Vector::Zero(d);
  for (int i = 0; i < cfg.k; ++i) theta_star(i) = 1.0;
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  Matrix F(cfg.n, d);
  Vector y(cfg.n);
  for (int s = 0; s < cfg.n; ++s) {
    const double x = 2.0 * uniform01(rng) - 1.0;
    F.row(s) = chebyshev_features(x, d).transpose();
    y(s) = F.row(s).dot(theta_star) + noise(rng);
  }
  const double log_inv_delta = -std::log(cfg.delta);
  const double s2 = cfg.noise_std * cfg.noise_std;
  const double nll_star = (F * theta_star - y).squaredNorm() / (2.0 * s2) +
                          0.5 * cfg.n * (kLog2Pi + std::log(s2));

  SparseRun out;
  out.thresholds = {
      log_inv_delta - plug_in_log_predictive(F, y, cfg.noise_std, false, cfg.k, cfg.radius_sq),
      log_inv_delta - plug_in_log_predictive(F, y, cfg.noise_std, true, cfg.k, cfg.radius_sq),
      log_inv_delta - log_evidence_on(F, y, cfg.noise_std, cfg.lambda),
      log_inv_delta - sparse_mixture_log_evidence(F, y, cfg.noise_std, cfg.lambda, cfg.k),
  };
  for (double thr : out.thresholds) {
    const auto bands = coordinate_bands(F, y, cfg.noise_std, cfg.k, thr);
    std::vector<double> widths;
    int empty = 0, unbounded = 0;
    for (const auto& band : bands) {
      if (band.unbounded) {
        widths.push_back(std::numeric_limits<double>::infinity());
        ++unbounded;
      } else if (band.empty()) {
        widths.push_back(0.0);
        ++empty;
      } else {
        widths.push_back(band.hi - band.lo);
      }
    }
    out.widths.push_back(std::move(widths));
    out.empty_bands.push_back(empty);
    out.unbounded_bands.push_back(unbounded);
    out.covers_theta_star.push_back(nll_star <= thr);
  }
  return out;
}

}  // namespace

double sparse_mixture_log_evidence(const Matrix& features, const Vector& y,
                                   double noise_std, double lambda, int k) {
  const int d = static_cast<int>(features.cols());
  require(k >= 1 && k <= 2, "sparse mixture: k must be 1 or 2");
  std::vector<double> terms;
  for (const auto& support : supports_up_to(d, std::min(k, d))) {
    terms.push_back(log_evidence_on(columns(features, support), y, noise_std, lambda));
  }
  return log_sum_exp(terms) - k * std::log(static_cast<double>(d));
}

std::vector<SparseRun> run_sparse(const SparseConfig& config) {
  config.validate();
  const auto R = static_cast<std::size_t>(config.runs);
  std::vector<SparseRun> runs(R);
  std::vector<std::exception_ptr> errors(R);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(R); ++i) {
    const auto r = static_cast<std::size_t>(i);
    try {
      runs[r] = sparse_run(config, r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

int cmd_sparse(const Config& config, std::ostream& log) {
  const auto cfg = SparseConfig::from(config);
  ensure_directory(cfg.out);
  const auto runs = run_sparse(cfg);
  const std::string meta = metadata_line(config, cfg.seed);
  CsvWriter widths(cfg.out / "sparse_widths.csv", meta, {"method", "run", "coord", "width"});
  for (std::size_t m = 0; m < kSparseMethods.size(); ++m) {
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (int i = 0; i < cfg.d; ++i) {
        widths.field(kSparseMethods[m]).field(r).field(i + 1).field(
            runs[r].widths[m][static_cast<std::size_t>(i)]);
        widths.end_row();
      }
    }
  }
  widths.close();

  CsvWriter summary(cfg.out / "sparse_summary.csv", meta,
                    {"method", "coord", "mean_width", "std_width", "coverage_rate",
                     "empty_bands"});
  for (std::size_t m = 0; m < kSparseMethods.size(); ++m) {
    int covered = 0, empty = 0;
    std::vector<double> averaged;
    for (const auto& run : runs) {
      covered += run.covers_theta_star[m] ? 1 : 0;
      empty += run.empty_bands[m];
      averaged.push_back(mean(run.widths[m]));
    }
    const double coverage = static_cast<double>(covered) / static_cast<double>(runs.size());
    for (int i = 0; i < cfg.d; ++i) {
      std::vector<double> w;
      for (const auto& run : runs) w.push_back(run.widths[m][static_cast<std::size_t>(i)]);
      summary.field(kSparseMethods[m]).field(i + 1).field(mean(w)).field(sample_std(w))
          .field(coverage).field(empty);
      summary.end_row();
    }
    log << kSparseMethods[m] << ": coordinate-averaged width " << format_double(mean(averaged))
        << "\n";
  }
  summary.close();
  log << "wrote " << (cfg.out / "sparse_widths.csv").string() << "\n";
  return kExitOk;
}

}  // namespace seqmix::exp

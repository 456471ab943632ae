#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <string>

#include "seqmix/kernels.hpp"

namespace seqmix::kernels {

namespace {

std::size_t block_count(std::size_t n) {
  return (n + kBlockSize - 1) / kBlockSize;
}

struct BlockRange {
  std::size_t begin;
  std::size_t end;
};

BlockRange block_range(std::size_t block, std::size_t n) {
  const std::size_t begin = block * kBlockSize;
  return {begin, std::min(n, begin + kBlockSize)};
}

// Combines per-block (max, scaled sum) pairs in block order.
double combine_lse(const std::vector<double>& maxima,
                   const std::vector<double>& sums) {
  double m = kNegInf;
  for (double v : maxima) m = std::max(m, v);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t b = 0; b < maxima.size(); ++b) {
    if (maxima[b] != kNegInf) s += sums[b] * std::exp(maxima[b] - m);
  }
  return m + std::log(s);
}

}  // namespace

void accumulate_nll(const ModelFamily& model, const Matrix& atoms,
                    const Observation& obs, std::span<double> nll) {
  require(static_cast<Eigen::Index>(nll.size()) == atoms.rows(),
          "nll buffer size != atom count");
  if (model.kind() == ModelKind::FiniteCategorical) {
    serial::accumulate_nll(model, atoms, obs, nll);
    return;
  }
  model.check(Vector::Zero(model.parameter_dimension()), obs);
  const auto m = static_cast<std::ptrdiff_t>(atoms.rows());
  const auto d = static_cast<Eigen::Index>(atoms.cols());
  const Vector& x = obs.covariate;
  double* out = nll.data();

  if (model.kind() == ModelKind::LogisticBernoulli) {
    const double sign = obs.outcome == 1.0 ? -1.0 : 1.0;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
      double z = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) z += atoms(i, k) * x[k];
      out[i] += softplus(sign * z);
    }
  } else {
    const double sigma = model.noise_std_for(obs);
    const double c = 0.5 * kLog2Pi + std::log(sigma);
    const double y = obs.outcome;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < m; ++i) {
      double z = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) z += atoms(i, k) * x[k];
      const double r = (y - z) / sigma;
      out[i] += c + 0.5 * r * r;
    }
  }
}

double log_sum_exp(std::span<const double> values) {
  const std::size_t n = values.size();
  const std::size_t nb = block_count(n);
  std::vector<double> maxima(nb, kNegInf), sums(nb, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto r = block_range(static_cast<std::size_t>(b), n);
    double m = kNegInf;
    for (std::size_t i = r.begin; i < r.end; ++i) m = std::max(m, values[i]);
    double s = 0.0;
    if (m != kNegInf) {
      for (std::size_t i = r.begin; i < r.end; ++i) s += std::exp(values[i] - m);
    }
    maxima[static_cast<std::size_t>(b)] = m;
    sums[static_cast<std::size_t>(b)] = s;
  }
  return combine_lse(maxima, sums);
}

double log_evidence(std::span<const double> nll, const Vector& log_prior) {
  require(static_cast<Eigen::Index>(nll.size()) == log_prior.size(),
          "nll and prior differ in length");
  const std::size_t n = nll.size();
  const std::size_t nb = block_count(n);
  std::vector<double> maxima(nb, kNegInf), sums(nb, 0.0);
  const double* prior = log_prior.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto r = block_range(static_cast<std::size_t>(b), n);
    double m = kNegInf;
    for (std::size_t i = r.begin; i < r.end; ++i) {
      m = std::max(m, prior[i] - nll[i]);
    }
    double s = 0.0;
    if (m != kNegInf) {
      for (std::size_t i = r.begin; i < r.end; ++i) {
        s += std::exp(prior[i] - nll[i] - m);
      }
    }
    maxima[static_cast<std::size_t>(b)] = m;
    sums[static_cast<std::size_t>(b)] = s;
  }
  return combine_lse(maxima, sums);
}

void quadratic_form(const Matrix& atoms, const Vector& center, const Matrix& H,
                    std::span<double> out) {
  require(static_cast<Eigen::Index>(out.size()) == atoms.rows(),
          "output size != atom count");
  const auto m = static_cast<std::ptrdiff_t>(atoms.rows());
  const auto d = static_cast<Eigen::Index>(atoms.cols());
  double* dst = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double q = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double dj = atoms(i, j) - center[j];
      double hj = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) hj += H(j, k) * (atoms(i, k) - center[k]);
      q += dj * hj;
    }
    dst[i] = 0.5 * q;
  }
}

MemberScan scan_members(const Matrix& atoms, std::span<const double> statistic,
                        double threshold, const Matrix& arms) {
  require(static_cast<Eigen::Index>(statistic.size()) == atoms.rows(),
          "statistic size != atom count");
  const std::size_t n = statistic.size();
  const std::size_t nb = block_count(n);
  const auto n_arms = static_cast<std::size_t>(arms.rows());
  const auto d = static_cast<Eigen::Index>(atoms.cols());
  std::vector<MemberScan> partial(nb);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto r = block_range(static_cast<std::size_t>(b), n);
    MemberScan& local = partial[static_cast<std::size_t>(b)];
    local.best_inner.assign(n_arms, kNegInf);
    for (std::size_t i = r.begin; i < r.end; ++i) {
      if (!(statistic[i] <= threshold)) continue;
      const auto row = static_cast<Eigen::Index>(i);
      ++local.members;
      const double c0 = atoms(row, 0);
      local.coord_min = std::min(local.coord_min, c0);
      local.coord_max = std::max(local.coord_max, c0);
      for (std::size_t a = 0; a < n_arms; ++a) {
        double v = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
          v += atoms(row, k) * arms(static_cast<Eigen::Index>(a), k);
        }
        if (v > local.best_inner[a]) local.best_inner[a] = v;
      }
    }
  }

  MemberScan scan;
  scan.best_inner.assign(n_arms, kNegInf);
  for (const auto& local : partial) {
    scan.members += local.members;
    scan.coord_min = std::min(scan.coord_min, local.coord_min);
    scan.coord_max = std::max(scan.coord_max, local.coord_max);
    for (std::size_t a = 0; a < n_arms; ++a) {
      scan.best_inner[a] = std::max(scan.best_inner[a], local.best_inner[a]);
    }
  }
  return scan;
}

std::size_t argmin(std::span<const double> values) {
  require(!values.empty(), "argmin of an empty range");
  const std::size_t n = values.size();
  const std::size_t nb = block_count(n);
  std::vector<std::size_t> best(nb, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nb); ++b) {
    const auto r = block_range(static_cast<std::size_t>(b), n);
    std::size_t k = r.begin;
    for (std::size_t i = r.begin + 1; i < r.end; ++i) {
      if (values[i] < values[k]) k = i;
    }
    best[static_cast<std::size_t>(b)] = k;
  }
  std::size_t k = best.front();
  for (std::size_t b = 1; b < nb; ++b) {
    if (values[best[b]] < values[k]) k = best[b];
  }
  return k;
}

void configure_threads_from_env() {
  const char* env = std::getenv("SEQMIX_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long cap = std::strtol(env, &end, 10);
  if (end == env || cap < 1) return;
  const int current = omp_get_max_threads();
  omp_set_num_threads(static_cast<int>(std::min<long>(cap, current)));
}

}  // namespace seqmix::kernels

#pragma once

// Data-parallel grid kernels. Everything that touches every atom of a
// quadrature grid goes through here. The default (OpenMP) versions reduce
// over fixed-size blocks and combine block partials in block order, so the
// result does not depend on the thread count. `serial::` holds the plain
// loop reference used by the tests and the benchmark.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "seqmix/common.hpp"
#include "seqmix/models.hpp"

namespace seqmix::kernels {

inline constexpr std::size_t kBlockSize = 2048;

struct MemberScan {
  std::size_t members = 0;
  /// Per arm: max over member atoms of <theta, arm>; -inf if no members.
  std::vector<double> best_inner;
  /// Extent of the first coordinate over member atoms.
  double coord_min = std::numeric_limits<double>::infinity();
  double coord_max = -std::numeric_limits<double>::infinity();

  double width() const { return members == 0 ? 0.0 : coord_max - coord_min; }
};

/// nll[i] -= log p(y | atom_i; x) for one observation.
void accumulate_nll(const ModelFamily& model, const Matrix& atoms,
                    const Observation& obs, std::span<double> nll);

double log_sum_exp(std::span<const double> values);

/// log sum_i exp(log_prior_i - nll_i).
double log_evidence(std::span<const double> nll, const Vector& log_prior);

/// out[i] = 1/2 (atom_i - center)^T H (atom_i - center).
void quadratic_form(const Matrix& atoms, const Vector& center, const Matrix& H,
                    std::span<double> out);

/// Scans atoms with statistic[i] <= threshold. `arms` holds one arm per row.
MemberScan scan_members(const Matrix& atoms, std::span<const double> statistic,
                        double threshold, const Matrix& arms);

/// Index of the smallest value; ties go to the lowest index.
std::size_t argmin(std::span<const double> values);

namespace serial {

void accumulate_nll(const ModelFamily& model, const Matrix& atoms,
                    const Observation& obs, std::span<double> nll);
double log_sum_exp(std::span<const double> values);
double log_evidence(std::span<const double> nll, const Vector& log_prior);
void quadratic_form(const Matrix& atoms, const Vector& center, const Matrix& H,
                    std::span<double> out);
MemberScan scan_members(const Matrix& atoms, std::span<const double> statistic,
                        double threshold, const Matrix& arms);
std::size_t argmin(std::span<const double> values);

}  // namespace serial

/// Applies SEQMIX_THREADS (if set) as an upper bound on the OpenMP pool.
void configure_threads_from_env();

}  // namespace seqmix::kernels

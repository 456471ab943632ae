// Serial reference vs OpenMP kernels on a bandit-sized grid.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <string>
#include <vector>

#include "seqmix/kernels.hpp"
#include "seqmix/models.hpp"
#include "seqmix/rng.hpp"
#include "seqmix/spaces.hpp"

using namespace seqmix;

namespace {

const ParameterSpace& grid(int n) {
  static const ParameterSpace g201 = ball_grid(2, 4.0, 201);
  static const ParameterSpace g401 = ball_grid(2, 4.0, 401);
  return n == 201 ? g201 : g401;
}

Matrix arms() {
  Rng rng(7);
  Matrix a(10, 2);
  for (int k = 0; k < 10; ++k) a.row(k) = uniform_ball_sample(2, 1.0, rng).transpose();
  return a;
}

template <bool Parallel>
void BM_AccumulateNll(benchmark::State& state) {
  const auto& g = grid(static_cast<int>(state.range(0)));
  const auto model = ModelFamily::logistic(2);
  std::vector<double> nll(g.size(), 0.0);
  Vector x(2);
  x << 0.3, -0.6;
  const Observation obs{x, 1.0, std::nullopt};
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::accumulate_nll(model, g.atoms, obs, nll);
    } else {
      kernels::serial::accumulate_nll(model, g.atoms, obs, nll);
    }
    benchmark::DoNotOptimize(nll.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}

template <bool Parallel>
void BM_LogEvidence(benchmark::State& state) {
  const auto& g = grid(static_cast<int>(state.range(0)));
  std::vector<double> nll(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) nll[i] = g.atom(i).squaredNorm();
  for (auto _ : state) {
    double v = Parallel ? kernels::log_evidence(nll, g.log_prior) : kernels::serial::log_evidence(nll, g.log_prior);
    benchmark::DoNotOptimize(v);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}

template <bool Parallel>
void BM_ScanMembers(benchmark::State& state) {
  const auto& g = grid(static_cast<int>(state.range(0)));
  const Matrix a = arms();
  std::vector<double> stat(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) stat[i] = g.atom(i).squaredNorm();
  for (auto _ : state) {
    auto scan = Parallel ? kernels::scan_members(g.atoms, stat, 4.0, a)
                         : kernels::serial::scan_members(g.atoms, stat, 4.0, a);
    benchmark::DoNotOptimize(scan.members);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}

template <bool Parallel>
void BM_QuadraticForm(benchmark::State& state) {
  const auto& g = grid(static_cast<int>(state.range(0)));
  Matrix H(2, 2);
  H << 3.0, 0.5, 0.5, 1.0;
  const Vector c = Vector::Constant(2, 0.2);
  std::vector<double> out(g.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::quadratic_form(g.atoms, c, H, out);
    } else {
      kernels::serial::quadratic_form(g.atoms, c, H, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(g.size()));
}

}  // namespace

BENCHMARK(BM_AccumulateNll<false>)->Arg(201)->Arg(401);
BENCHMARK(BM_AccumulateNll<true>)->Arg(201)->Arg(401);
BENCHMARK(BM_LogEvidence<false>)->Arg(201)->Arg(401);
BENCHMARK(BM_LogEvidence<true>)->Arg(201)->Arg(401);
BENCHMARK(BM_ScanMembers<false>)->Arg(201)->Arg(401);
BENCHMARK(BM_ScanMembers<true>)->Arg(201)->Arg(401);
BENCHMARK(BM_QuadraticForm<false>)->Arg(201)->Arg(401);
BENCHMARK(BM_QuadraticForm<true>)->Arg(201)->Arg(401);

int main(int argc, char** argv) {
  kernels::configure_threads_from_env();
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}

#include <cmath>
#include <exception>
#include <map>
#include <memory>

#include "seqmix/experiments.hpp"
#include "seqmix/kernels.hpp"
#include "seqmix/spaces.hpp"

namespace seqmix::exp {

BanditSweepConfig BanditSweepConfig::from(const Config& c) {
  c.check_keys({"experiment", "d", "S", "horizon", "n_arms", "delta", "methods", "seed",
                "runs", "grid_n", "normalize_arms", "out"});
  BanditSweepConfig b;
  b.d = static_cast<int>(c.get_int("d", b.d));
  b.S_values = c.get_doubles("S", b.S_values);
  b.horizon = static_cast<int>(c.get_int("horizon", b.horizon));
  b.n_arms = static_cast<int>(c.get_int("n_arms", b.n_arms));
  b.delta = c.get_double("delta", b.delta);
  if (c.has("methods")) {
    b.methods.clear();
    for (const auto& name : c.get_list("methods", {})) {
      const auto m = parse_method(name);
      if (!m) throw ConfigError("methods: unknown bandit method '" + name + "'");
      b.methods.push_back(*m);
    }
  }
  b.seed = c.get_uint("seed", b.seed);
  b.runs = static_cast<int>(c.get_int("runs", b.runs));
  b.grid_n = static_cast<int>(c.get_int("grid_n", b.grid_n));
  b.normalize_arms = c.get_bool("normalize_arms", b.normalize_arms);
  b.out = c.get_string("out", b.out.string());
  b.validate();
  return b;
}

void BanditSweepConfig::validate() const {
  if (d < 1 || d > 3) throw ConfigError("d must be 1, 2 or 3");
  if (S_values.empty()) throw ConfigError("S must list at least one radius");
  for (double s : S_values) {
    if (!(s > 1.0)) throw ConfigError("every S must exceed 1");
  }
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (n_arms < 2) throw ConfigError("n_arms must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (methods.empty()) throw ConfigError("methods must not be empty");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (grid_n < 3) throw ConfigError("grid_n must be >= 3");
}

std::vector<BanditRun> run_bandit_sweep(const BanditSweepConfig& config) {
  config.validate();
  std::map<double, std::shared_ptr<const ParameterSpace>> grids;
  for (double S : config.S_values) {
    if (!grids.count(S)) {
      grids[S] = std::make_shared<const ParameterSpace>(ball_grid(config.d, S, config.grid_n));
    }
  }
  std::vector<BanditRun> runs;
  for (auto m : config.methods) {
    for (double S : config.S_values) {
      for (int r = 0; r < config.runs; ++r) {
        runs.push_back({m, S, config.seed + static_cast<std::uint64_t>(r), {}});
      }
    }
  }
  auto run_one = [&](BanditRun& run) {
    BanditConfig bc;
    bc.d = config.d;
    bc.S = run.S;
    bc.horizon = config.horizon;
    bc.n_arms = config.n_arms;
    bc.delta = config.delta;
    bc.method = run.method;
    bc.seed = run.run_seed;
    bc.grid_n = config.grid_n;
    bc.normalize_arms = config.normalize_arms;
    run.trace = run_episode(bc, grids.at(run.S).get());
  };
  // Episodes are independent; the grid kernels inside each episode stay
  // serial when nested in this loop.
  const auto n = static_cast<long long>(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    try {
      run_one(runs[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

int cmd_bandit(const Config& config, std::ostream& log) {
  const auto cfg = BanditSweepConfig::from(config);
  ensure_directory(cfg.out);
  const auto runs = run_bandit_sweep(cfg);
  const std::string meta = metadata_line(config, cfg.seed);

  CsvWriter regret(cfg.out / "bandit_regret.csv", meta,
                   {"method", "S", "seed", "t", "cum_regret", "threshold", "width_proxy"});
  std::size_t fallbacks = 0;
  for (const auto& run : runs) {
    fallbacks += run.trace.fallback_steps;
    for (std::size_t t = 0; t < run.trace.steps.size(); ++t) {
      const auto& s = run.trace.steps[t];
      regret.field(method_name(run.method))
          .field(run.S)
          .field(static_cast<long long>(run.run_seed))
          .field(t + 1)
          .field(s.cum_regret)
          .field(s.threshold)
          .field(s.width);
      regret.end_row();
    }
  }
  regret.close();

  CsvWriter summary(cfg.out / "bandit_summary.csv", meta,
                    {"method", "S", "runs", "mean_final_regret", "std_final_regret",
                     "mean_width_proxy", "coverage_rate"});
  for (auto m : cfg.methods) {
    for (double S : cfg.S_values) {
      std::vector<double> finals, widths;
      int covered = 0;
      for (const auto& run : runs) {
        if (run.method != m || run.S != S) continue;
        finals.push_back(run.trace.final_regret());
        widths.push_back(run.trace.mean_width());
        covered += run.trace.always_covered() ? 1 : 0;
      }
      summary.field(method_name(m))
          .field(S)
          .field(finals.size())
          .field(mean(finals))
          .field(sample_std(finals))
          .field(mean(widths))
          .field(static_cast<double>(covered) / static_cast<double>(finals.size()));
      summary.end_row();
    }
  }
  summary.close();
  if (fallbacks > 0) {
    log << "warning: " << fallbacks
        << " steps had an empty confidence set and played the point estimate\n";
  }
  log << "wrote " << (cfg.out / "bandit_regret.csv").string() << " and "
      << (cfg.out / "bandit_summary.csv").string() << "\n";
  return kExitOk;
}

}  // namespace seqmix::exp

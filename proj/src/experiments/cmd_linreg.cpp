#include <cmath>
#include <exception>

#include "seqmix/experiments.hpp"
#include "seqmix/mixing.hpp"
#include "seqmix/trackers.hpp"

namespace seqmix::exp {

LinregConfig LinregConfig::from(const Config& c) {
  c.check_keys({"experiment", "d", "lambda", "noise_std", "S", "horizon", "runs", "delta",
                "probes", "seed", "out"});
  LinregConfig k;
  k.d = static_cast<int>(c.get_int("d", k.d));
  k.lambda = c.get_double("lambda", k.lambda);
  k.noise_std = c.get_double("noise_std", k.noise_std);
  k.S = c.get_double("S", k.S);
  k.horizon = static_cast<int>(c.get_int("horizon", k.horizon));
  k.replications = static_cast<int>(c.get_int("runs", k.replications));
  k.delta = c.get_double("delta", k.delta);
  k.probes = static_cast<int>(c.get_int("probes", k.probes));
  k.seed = c.get_uint("seed", k.seed);
  k.out = c.get_string("out", k.out.string());
  k.validate();
  return k;
}

void LinregConfig::validate() const {
  if (d < 1) throw ConfigError("d must be >= 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(noise_std > 0.0)) throw ConfigError("noise_std must be positive");
  if (!(S > 0.0)) throw ConfigError("S must be positive");
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  if (replications < 1) throw ConfigError("runs must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (probes < 0) throw ConfigError("probes must be >= 0");
}

namespace {

struct Replication {
  std::vector<LinregRow> rows;
  bool covered = true;
  bool ratio_agree = true;
  bool relaxed_contains_exact = true;
};

Replication replicate(const LinregConfig& cfg, std::uint64_t rep, bool keep_rows) {
  Rng rng(child_seed(cfg.seed, rep, "linreg"));
  const Vector theta_star = uniform_ball_sample(cfg.d, cfg.S, rng);
  std::vector<Vector> probes{theta_star};
  for (int i = 0; i < cfg.probes; ++i) probes.push_back(uniform_ball_sample(cfg.d, cfg.S, rng));
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  auto state = GaussianPosteriorState::ridge(cfg.d, cfg.lambda, cfg.noise_std);

  Replication out;
  for (int t = 0; t <= cfg.horizon; ++t) {
    if (t > 0) {
      const Vector x = uniform_ball_sample(cfg.d, 1.0, rng);
      const double y = x.dot(theta_star) + noise(rng);
      state = gaussian_conjugate_update(state, Observation{x, y, std::nullopt});
    }
    const auto exact = rls_ellipsoid(state, cfg.delta, EllipsoidForm::Exact);
    const auto relaxed = rls_ellipsoid(state, cfg.delta, EllipsoidForm::BallRelaxed, cfg.S);
    LinregRow row;
    row.t = t;
    row.gamma = exact.gamma;
    row.threshold_exact = exact.rhs(theta_star);
    row.threshold_relaxed = relaxed.rhs(theta_star);
    row.member_true_theta = exact.contains(theta_star);
    row.ratio_agree = true;
    for (const auto& p : probes) {
      const bool in_exact = exact.contains(p);
      if (in_exact != gaussian_ratio_membership(state, p, cfg.delta)) row.ratio_agree = false;
      if (in_exact && !relaxed.contains(p)) out.relaxed_contains_exact = false;
    }
    out.covered = out.covered && row.member_true_theta;
    out.ratio_agree = out.ratio_agree && row.ratio_agree;
    if (keep_rows) out.rows.push_back(row);
  }
  return out;
}

}  // namespace

LinregResult run_linreg(const LinregConfig& config) {
  config.validate();
  const auto R = static_cast<std::size_t>(config.replications);
  std::vector<Replication> reps(R);
  std::vector<std::exception_ptr> errors(R);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(R); ++i) {
    const auto r = static_cast<std::size_t>(i);
    try {
      reps[r] = replicate(config, r, r == 0);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  LinregResult result;
  result.rows = std::move(reps[0].rows);
  result.replications = config.replications;
  for (const auto& r : reps) {
    result.covered_all_t += r.covered ? 1 : 0;
    result.ratio_agree_all = result.ratio_agree_all && r.ratio_agree;
    result.relaxed_contains_exact = result.relaxed_contains_exact && r.relaxed_contains_exact;
  }
  return result;
}

int cmd_linreg(const Config& config, std::ostream& log) {
  const auto cfg = LinregConfig::from(config);
  ensure_directory(cfg.out);
  const auto result = run_linreg(cfg);
  const std::string meta = metadata_line(config, cfg.seed);
  CsvWriter csv(cfg.out / "linreg.csv", meta,
                {"t", "gamma_t", "threshold_exact", "threshold_relaxed", "member_true_theta",
                 "ratio_agree"});
  for (const auto& row : result.rows) {
    csv.field(row.t)
        .field(row.gamma)
        .field(row.threshold_exact)
        .field(row.threshold_relaxed)
        .field(row.member_true_theta)
        .field(row.ratio_agree);
    csv.end_row();
  }
  csv.close();

  const double coverage =
      static_cast<double>(result.covered_all_t) / static_cast<double>(result.replications);
  CsvWriter summary(cfg.out / "linreg_summary.csv", meta,
                    {"runs", "delta", "coverage_rate", "ratio_agree_all",
                     "relaxed_contains_exact"});
  summary.field(result.replications)
      .field(cfg.delta)
      .field(coverage)
      .field(result.ratio_agree_all)
      .field(result.relaxed_contains_exact);
  summary.end_row();
  summary.close();

  const double slack = 3.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) / result.replications);
  bool ok = true;
  if (!result.ratio_agree_all) {
    log << "ellipsoid and prior-posterior ratio memberships disagree\n";
    ok = false;
  }
  if (!result.relaxed_contains_exact) {
    log << "relaxed ellipsoid does not contain the exact one on the ball\n";
    ok = false;
  }
  if (1.0 - coverage > cfg.delta + slack) {
    log << "coverage exceeded: failure rate " << format_double(1.0 - coverage) << "\n";
    ok = false;
  }
  log << "wrote " << (cfg.out / "linreg.csv").string() << "\n";
  return ok ? kExitOk : kExitAssertion;
}

}  // namespace seqmix::exp

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <memory>

#include "seqmix/evidence.hpp"
#include "seqmix/experiments.hpp"
#include "seqmix/kernels.hpp"
#include "seqmix/mixing.hpp"
#include "seqmix/tempered.hpp"
#include "seqmix/trackers.hpp"

namespace seqmix::exp {

namespace {

enum Slot {
  kSeqLr,
  kPriorMixing,
  kSeqBayes,
  kElbo,
  kTemperedHellinger,
  kSubGaussian,
  kOnlineVaw,
  kUnionBound,
  kRegretEw,
  kNumSlots,
};

const std::vector<std::string> kNames{
    "seq-lr-running-mle", "prior-mixing",  "sequential-bayes",
    "elbo",               "tempered-hellinger", "sub-gaussian",
    "online-to-confidence-vaw", "union-bound", "regret-to-confidence-ew"};

using Failures = std::array<bool, kNumSlots>;

/// Finite Theta, logistic-Bernoulli stream.
void bernoulli_replication(const CoverageConfig& cfg, std::uint64_t rep, Failures& failed) {
  Rng rng(child_seed(cfg.seed, rep, "coverage-bernoulli"));
  const int d = cfg.d;
  const auto m = static_cast<std::size_t>(cfg.num_atoms);
  const auto model = ModelFamily::logistic(d);
  std::vector<Vector> atoms;
  for (std::size_t i = 0; i < m; ++i) atoms.push_back(uniform_ball_sample(d, 2.0, rng));
  const std::vector<double> w(m, 1.0);
  auto space = std::make_shared<const ParameterSpace>(make_finite(atoms, w));
  const std::size_t star = static_cast<std::size_t>(rng() % m);
  const Vector theta_star = atoms[star];
  const double log_inv_delta = -std::log(cfg.delta);

  std::vector<double> nll(m, 0.0), step(m);
  FiniteWeights bayes = prior_weights(space);
  auto seq_lr = MartingaleTracker::seq_likelihood_ratio(model);
  auto seq_bayes = MartingaleTracker::seq_mixing(model);
  std::vector<double> lw(m);

  for (int t = 0; t < cfg.horizon; ++t) {
    const Vector x = uniform_ball_sample(d, 2.0, rng);
    const double y = uniform01(rng) < sigmoid(x.dot(theta_star)) ? 1.0 : 0.0;
    const Observation obs{x, y, std::nullopt};

    const std::size_t mle = kernels::argmin(nll);  // theta_hat_{t-1}
    seq_lr.step(Dirac{atoms[mle]}, obs);
    seq_bayes.step(bayes, obs);
    for (std::size_t i = 0; i < m; ++i) {
      step[i] = log_density(model, atoms[i], obs);
      nll[i] -= step[i];
    }
    bayes = ew_update(bayes, step, 1.0);

    const double stat = nll[star];
    const double min_nll = *std::min_element(nll.begin(), nll.end());
    if (stat > seq_lr.threshold(cfg.delta)) failed[kSeqLr] = true;
    if (stat > seq_bayes.threshold(cfg.delta)) failed[kSeqBayes] = true;
    const double log_ev = kernels::serial::log_evidence(nll, space->log_prior);
    if (stat > evidence_threshold(cfg.delta, log_ev)) failed[kPriorMixing] = true;

    // rho_t: posterior tempered at 1/2 (data-dependent, not the Bayes one).
    for (std::size_t i = 0; i < m; ++i) lw[i] = space->log_prior(static_cast<Eigen::Index>(i)) - 0.5 * nll[i];
    const double z = log_sum_exp(lw);
    FiniteWeights rho{space, Vector(static_cast<Eigen::Index>(m))};
    double expected = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      rho.log_weights(static_cast<Eigen::Index>(i)) = lw[i] - z;
      expected += std::exp(lw[i] - z) * nll[i];
    }
    const double elbo_value = -expected - kl_divergence(rho, prior_weights(space));
    if (stat > log_inv_delta - elbo_value) failed[kElbo] = true;

    if (stat > union_bound_threshold(m, cfg.delta, min_nll)) failed[kUnionBound] = true;
    if (stat > regret_to_confidence_threshold(cfg.delta, min_nll, finite_ew_certificate(m),
                                              static_cast<std::size_t>(t + 1))) {
      failed[kRegretEw] = true;
    }
  }
}

/// Gaussian-linear stream with ridge-regression predictors.
void gaussian_replication(const CoverageConfig& cfg, std::uint64_t rep, Failures& failed) {
  Rng rng(child_seed(cfg.seed, rep, "coverage-gaussian"));
  const int d = cfg.d;
  const double sigma = cfg.noise_std;
  const auto model = ModelFamily::gaussian_linear(d, sigma);
  const Vector theta_star = uniform_ball_sample(d, 1.0, rng);
  std::normal_distribution<double> noise(0.0, sigma);

  auto posterior = GaussianPosteriorState::ridge(d, 1.0, sigma);
  auto sub = MartingaleTracker::sub_gaussian(d, sigma);
  VawState vaw = VawState::make(d, 1.0);
  double hellinger_sum = 0.0;
  double regret_rls = 0.0;   // Lambda_t(theta*) of the RLS plug-in predictions
  double sq_loss_star = 0.0;
  double vaw_stat = 0.0;
  double regret_vaw = 0.0;
  const double hellinger_thr = 2.0 * -std::log(cfg.delta);

  for (int t = 0; t < cfg.horizon; ++t) {
    const Vector x = uniform_ball_sample(d, 1.0, rng);
    const double y = x.dot(theta_star) + noise(rng);
    const Observation obs{x, y, std::nullopt};

    const double log_p_star = log_density(model, theta_star, obs);
    hellinger_sum += hellinger_sq_model(model, theta_star, posterior.mean, obs);
    regret_rls += log_p_star - log_density(model, posterior.mean, obs);
    if (hellinger_sum - regret_rls > hellinger_thr) failed[kTemperedHellinger] = true;

    sub.step(posterior.as_mixing(), obs);
    const double r = x.dot(theta_star) - y;
    sq_loss_star += r * r / (2.0 * sigma * sigma);
    if (sq_loss_star > sub.threshold(cfg.delta)) failed[kSubGaussian] = true;

    const double y_hat = vaw_predict(vaw, x);
    const double gap = y_hat - x.dot(theta_star);
    vaw_stat += 0.5 * gap * gap / (sigma * sigma);
    const double resid = y - y_hat;
    const double log_p_hat = -0.5 * kLog2Pi - std::log(sigma) - 0.5 * resid * resid / (sigma * sigma);
    regret_vaw += log_p_star - log_p_hat;
    const double b_t = std::max(regret_vaw, 0.0);
    if (vaw_stat > online_to_confidence_threshold(b_t, 0.5, cfg.delta)) failed[kOnlineVaw] = true;

    posterior = gaussian_conjugate_update(posterior, obs);
    vaw = vaw_update(std::move(vaw), obs);
  }
}

}  // namespace

const std::vector<std::string>& coverage_construction_names() { return kNames; }

const std::vector<std::string>& default_coverage_constructions() { return kNames; }

double CoverageRow::binomial_3sigma() const {
  return 3.0 * std::sqrt(delta * (1.0 - delta) / replications);
}

CoverageConfig CoverageConfig::from(const Config& c) {
  c.check_keys({"experiment", "delta", "runs", "horizon", "num_atoms", "d", "noise_std",
                "seed", "constructions", "out"});
  CoverageConfig k;
  k.delta = c.get_double("delta", k.delta);
  k.replications = static_cast<int>(c.get_int("runs", k.replications));
  k.horizon = static_cast<int>(c.get_int("horizon", k.horizon));
  k.num_atoms = static_cast<int>(c.get_int("num_atoms", k.num_atoms));
  k.d = static_cast<int>(c.get_int("d", k.d));
  k.noise_std = c.get_double("noise_std", k.noise_std);
  k.seed = c.get_uint("seed", k.seed);
  k.constructions = c.get_list("constructions", {});
  k.out = c.get_string("out", k.out.string());
  k.validate();
  return k;
}

void CoverageConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (replications < 1) throw ConfigError("runs must be >= 1");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (num_atoms < 1) throw ConfigError("num_atoms must be >= 1");
  if (d < 1) throw ConfigError("d must be >= 1");
  if (!(noise_std > 0.0)) throw ConfigError("noise_std must be positive");
  for (const auto& name : constructions) {
    if (std::find(kNames.begin(), kNames.end(), name) == kNames.end()) {
      throw ConfigError("constructions: unknown construction '" + name + "'");
    }
  }
}

std::vector<CoverageRow> run_coverage(const CoverageConfig& config) {
  config.validate();
  const auto R = static_cast<std::size_t>(config.replications);
  std::vector<Failures> failed(R);
  std::vector<std::exception_ptr> errors(R);
  const auto n = static_cast<long long>(R);
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    try {
      failed[r].fill(false);
      bernoulli_replication(config, r, failed[r]);
      gaussian_replication(config, r, failed[r]);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  const auto& selected = config.constructions.empty() ? default_coverage_constructions()
                                                      : config.constructions;
  std::vector<CoverageRow> rows;
  for (const auto& name : selected) {
    const auto slot = static_cast<std::size_t>(
        std::find(kNames.begin(), kNames.end(), name) - kNames.begin());
    CoverageRow row;
    row.construction = name;
    row.delta = config.delta;
    row.replications = config.replications;
    for (const auto& f : failed) row.failures += f[slot] ? 1 : 0;
    rows.push_back(row);
  }
  return rows;
}

int cmd_coverage(const Config& config, std::ostream& log) {
  const auto cfg = CoverageConfig::from(config);
  ensure_directory(cfg.out);
  const auto rows = run_coverage(cfg);
  CsvWriter csv(cfg.out / "coverage.csv", metadata_line(config, cfg.seed),
                {"construction", "delta", "R", "failures", "failure_rate", "binomial_3sigma"});
  bool ok = true;
  for (const auto& row : rows) {
    csv.field(row.construction)
        .field(row.delta)
        .field(row.replications)
        .field(row.failures)
        .field(row.failure_rate())
        .field(row.binomial_3sigma());
    csv.end_row();
    if (!row.passes()) {
      ok = false;
      log << "coverage exceeded: " << row.construction << " failure rate "
          << format_double(row.failure_rate()) << " > "
          << format_double(row.delta + row.binomial_3sigma()) << "\n";
    }
  }
  csv.close();
  log << "wrote " << (cfg.out / "coverage.csv").string() << "\n";
  return ok ? kExitOk : kExitAssertion;
}

}  // namespace seqmix::exp

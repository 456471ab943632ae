#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seqmix/bandit.hpp"

namespace seqmix::exp {

/// Invalid configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure (exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitAssertion = 3;

/// Flat `key = value` configuration. `#` starts a comment; blank lines are
/// ignored; later assignments override earlier ones.
class Config {
 public:
  static Config parse(std::string_view text, const std::string& source = "<string>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& fallback) const;

  /// Throws ConfigError naming the first key outside `allowed`.
  void check_keys(const std::vector<std::string>& allowed) const;
  /// FNV-1a over the sorted key = value lines, `out` excluded.
  std::uint64_t hash() const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// CSV writer: LF endings, shortest round-trip numbers, one metadata line.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& metadata,
            const std::vector<std::string>& header);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  CsvWriter& field(std::string_view s);
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  CsvWriter& field(const std::string& s) { return field(std::string_view(s)); }
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(std::size_t v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(bool v) { return field(std::string_view(v ? "true" : "false")); }
  void end_row();
  void close();

 private:
  std::filesystem::path path_;
  std::string buffer_;
  bool row_started_ = false;
  bool closed_ = false;
};

std::string format_double(double v);
std::string metadata_line(const Config& config, std::uint64_t seed);
/// Creates the output directory; IoError on failure.
void ensure_directory(const std::filesystem::path& dir);

double sample_std(const std::vector<double>& v);
double mean(const std::vector<double>& v);

// ---------------------------------------------------------------- bandit

struct BanditSweepConfig {
  int d = 2;
  std::vector<double> S_values{4.0, 6.0, 8.0, 10.0};
  int horizon = 1000;
  int n_arms = 10;
  double delta = 0.05;
  std::vector<BanditMethod> methods{BanditMethod::MQ, BanditMethod::PL, BanditMethod::EMK};
  std::uint64_t seed = 1;
  int runs = 5;
  int grid_n = 201;
  bool normalize_arms = false;
  std::filesystem::path out = ".";

  static BanditSweepConfig from(const Config& c);
  void validate() const;
};

struct BanditRun {
  BanditMethod method;
  double S;
  std::uint64_t run_seed;
  BanditTrace trace;
};

/// Episodes in (method, S, run) order; run seeds are seed + run index.
std::vector<BanditRun> run_bandit_sweep(const BanditSweepConfig& config);
int cmd_bandit(const Config& config, std::ostream& log);

// -------------------------------------------------------------- coverage

struct CoverageConfig {
  double delta = 0.1;
  int replications = 2000;
  int horizon = 200;
  int num_atoms = 10;
  int d = 2;
  double noise_std = 1.0;
  std::uint64_t seed = 1;
  std::vector<std::string> constructions;  // empty: all default ones
  std::filesystem::path out = ".";

  static CoverageConfig from(const Config& c);
  void validate() const;
};

struct CoverageRow {
  std::string construction;
  double delta = 0.0;
  int replications = 0;
  int failures = 0;
  double failure_rate() const { return static_cast<double>(failures) / replications; }
  double binomial_3sigma() const;
  bool passes() const { return failure_rate() <= delta + binomial_3sigma(); }
};

/// Names accepted in `constructions`.
const std::vector<std::string>& coverage_construction_names();
const std::vector<std::string>& default_coverage_constructions();
std::vector<CoverageRow> run_coverage(const CoverageConfig& config);
int cmd_coverage(const Config& config, std::ostream& log);

// ---------------------------------------------------------------- linreg

struct LinregConfig {
  int d = 2;
  double lambda = 1.0;
  double noise_std = 1.0;
  double S = 1.0;
  int horizon = 200;
  int replications = 500;
  double delta = 0.05;
  int probes = 64;
  std::uint64_t seed = 1;
  std::filesystem::path out = ".";

  static LinregConfig from(const Config& c);
  void validate() const;
};

struct LinregRow {
  int t = 0;
  double gamma = 0.0;
  double threshold_exact = 0.0;    // right-hand side at theta*
  double threshold_relaxed = 0.0;
  bool member_true_theta = false;
  bool ratio_agree = false;
};

struct LinregResult {
  std::vector<LinregRow> rows;  // replication 0, t = 0..horizon
  int replications = 0;
  int covered_all_t = 0;        // replications with theta* inside at every t
  bool ratio_agree_all = true;  // over every replication and probe
  bool relaxed_contains_exact = true;
};

LinregResult run_linreg(const LinregConfig& config);
int cmd_linreg(const Config& config, std::ostream& log);

// ---------------------------------------------------------------- sparse

struct SparseConfig {
  int d = 20;
  int k = 2;
  int n = 20;
  double noise_std = 0.1;
  double lambda = 1.0;
  double radius_sq = 2.0;  // EMK estimators: |theta|^2 <= radius_sq
  int runs = 10;
  double delta = 0.05;
  std::uint64_t seed = 1;
  std::filesystem::path out = ".";

  static SparseConfig from(const Config& c);
  void validate() const;
};

inline const std::vector<std::string> kSparseMethods{"EMK", "EMK-sparse", "PPR",
                                                     "PPR-sparse"};

struct SparseRun {
  // widths[method][coord]
  std::vector<std::vector<double>> widths;
  std::vector<double> thresholds;
  std::vector<bool> covers_theta_star;
  std::vector<int> empty_bands;
  std::vector<int> unbounded_bands;
};

/// log[(1/d^k) sum over supports of size <= k of the Gaussian evidence on
/// that support] with prior N(0, I/lambda) on each support.
double sparse_mixture_log_evidence(const Matrix& features, const Vector& y,
                                   double noise_std, double lambda, int k = 2);
std::vector<SparseRun> run_sparse(const SparseConfig& config);
int cmd_sparse(const Config& config, std::ostream& log);

/// Chebyshev features T_0(x) ... T_{d-1}(x).
Vector chebyshev_features(double x, int d);

/// Dispatches a subcommand by name with IO/config error mapping to exit codes.
int run_command(const std::string& name, const Config& config, std::ostream& log,
                std::ostream& err);

}  // namespace seqmix::exp

// seqmix: experiment front end.
//
//   seqmix <bandit|coverage|linreg|sparse> --config FILE [--delta F] [--seed N]
//          [--runs N] [--out DIR] [--normalize-arms]

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "seqmix/experiments.hpp"
#include "seqmix/kernels.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<double> delta;
  std::optional<std::uint64_t> seed;
  std::optional<long long> runs;
  std::optional<std::string> out;
  bool normalize_arms = false;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "Configuration file (key = value)")->required();
  sub->add_option("--delta", o.delta, "Confidence level delta");
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--runs", o.runs, "Number of runs / replications");
  sub->add_option("--out", o.out, "Output directory");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace seqmix::exp;
  seqmix::kernels::configure_threads_from_env();

  CLI::App app{"Anytime-valid confidence sequences via sequential likelihood mixing"};
  app.require_subcommand(1);
  Overrides o;
  for (const char* name : {"bandit", "coverage", "linreg", "sparse"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub, o);
    if (std::string(name) == "bandit") {
      sub->add_flag("--normalize-arms", o.normalize_arms, "Rescale arms to the unit ball");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "seqmix: config-error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Config config;
  try {
    config = Config::load(o.config_path);
  } catch (const IoError& e) {
    std::cerr << "seqmix: io-error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    std::cerr << "seqmix: config-error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (o.delta) config.set("delta", format_double(*o.delta));
  if (o.seed) config.set("seed", std::to_string(*o.seed));
  if (o.runs) config.set("runs", std::to_string(*o.runs));
  if (o.out) config.set("out", *o.out);
  if (o.normalize_arms) config.set("normalize_arms", "true");
  return run_command(command, config, std::cout, std::cerr);
}

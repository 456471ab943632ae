#include "seqmix/experiments.hpp"

namespace seqmix::exp {

int run_command(const std::string& name, const Config& config, std::ostream& log,
                std::ostream& err) {
  try {
    const std::string declared = config.get_string("experiment", name);
    if (declared != name) {
      throw ConfigError("config declares experiment '" + declared + "' but command is '" +
                        name + "'");
    }
    if (name == "bandit") return cmd_bandit(config, log);
    if (name == "coverage") return cmd_coverage(config, log);
    if (name == "linreg") return cmd_linreg(config, log);
    if (name == "sparse") return cmd_sparse(config, log);
    throw ConfigError("unknown command '" + name + "'");
  } catch (const ConfigError& e) {
    err << "seqmix: config-error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "seqmix: io-error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "seqmix: config-error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace seqmix::exp

#ifndef MPATH_CLI_RUN_CONFIG_HPP_
#define MPATH_CLI_RUN_CONFIG_HPP_

#include <string>
#include <vector>

#include "mpath/data/task.hpp"
#include "mpath/evo/agent.hpp"
#include "mpath/store/serialization.hpp"
#include "mpath/train/seed.hpp"

namespace mpath::cli {

/// Everything a run needs. Parsed strictly: unknown keys and invalid values
/// raise ConfigError before any compute starts.
struct RunConfig {
  std::string store_dir;
  std::string output_dir;
  std::vector<data::TaskSpec> tasks;
  train::SeedConfig seed;
  evo::AgentConfig agent;
  std::size_t replicas = 1;
};

RunConfig parse_run_config(const store::Json& j);
/// Reads and parses a JSON config file. Relative directories are resolved
/// against the directory holding the file.
RunConfig load_run_config(const std::string& path);
store::Json run_config_to_json(const RunConfig& c);

}  // namespace mpath::cli

#endif  // MPATH_CLI_RUN_CONFIG_HPP_

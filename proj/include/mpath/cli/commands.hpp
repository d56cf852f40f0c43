#ifndef MPATH_CLI_COMMANDS_HPP_
#define MPATH_CLI_COMMANDS_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mpath/cli/run_config.hpp"
#include "mpath/evo/replicas.hpp"
#include "mpath/train/seed.hpp"

namespace mpath::cli {

/// Builds the store from the configured tasks, seeds one frozen path per task
/// and saves it to store_dir. Throws StoreError when store_dir already holds a
/// store.
std::vector<train::SeededPath> cmd_seed(const RunConfig& config, std::ostream& out);

struct EvolveOptions {
  std::optional<std::string> ablate;
  std::optional<std::string> force_support;
  std::optional<std::size_t> replicas;
  std::optional<std::size_t> cycles;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
  /// Output subdirectory; derived from the ablation when empty.
  std::string variant;
  bool resume = false;
};

struct EvolveOutcome {
  std::string variant;
  std::string variant_dir;
  evo::AgentConfig agent;
  std::vector<evo::ReplicaResult> replicas;
};

/// Applies command-line overrides to the configured agent.
evo::AgentConfig effective_agent_config(const RunConfig& config, const EvolveOptions& options);
std::string variant_name(const evo::AgentConfig& agent);

/// Runs the replicas of one variant. Writes <output_dir>/<variant>/:
/// replica_<r>.tsv (cycle reports), curve.tsv (per-cycle mean, s.e.m., max),
/// summary.json and manifest.json. Replica 0's store is saved back to store_dir.
EvolveOutcome cmd_evolve(const RunConfig& config, const EvolveOptions& options, std::ostream& out);

/// Accuracy of a published model or path on a split of its task.
double cmd_eval(const RunConfig& config, const std::string& id, data::Split split, std::ostream& out);

struct VariantSummary {
  std::string variant;
  std::vector<double> validation;
  std::vector<double> test;
  std::vector<double> main_test;
  std::vector<double> main_validation;
};

/// Reads the final cycle of every replica TSV of a variant directory.
VariantSummary read_variant(const std::string& output_dir, const std::string& variant);

/// Table of variants (mean +- s.e.m., max, Welch p-value of test accuracy
/// against the first variant) plus a main-path row.
std::string format_comparison(const std::vector<VariantSummary>& variants);

/// Writes <output_dir>/report.txt and <output_dir>/system.dot. An empty
/// variant list means every variant directory found under output_dir.
std::string cmd_report(const RunConfig& config, std::vector<std::string> variants, std::ostream& out);

}  // namespace mpath::cli

#endif  // MPATH_CLI_COMMANDS_HPP_

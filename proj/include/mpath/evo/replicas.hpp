#ifndef MPATH_EVO_REPLICAS_HPP_
#define MPATH_EVO_REPLICAS_HPP_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mpath/evo/agent.hpp"

namespace mpath::evo {

struct Summary {
  double mean = 0.0;
  /// Standard error of the mean; 0 for a single value.
  double sem = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

struct CurveRow {
  std::size_t cycle = 0;
  Summary validation;
  Summary test;
  Summary main_weight;
};

/// Per-cycle statistics across replicas. Replicas must have equal lengths.
std::vector<CurveRow> aggregate_curves(const std::vector<std::vector<CycleReport>>& runs);

inline constexpr const char* kCurveHeader =
    "cycle\tval_mean\tval_sem\tval_max\ttest_mean\ttest_sem\ttest_max\tmain_weight_mean\treplicas";
std::string format_curve_row(const CurveRow& row);

struct ReplicaResult {
  std::uint64_t seed = 0;
  std::vector<CycleReport> reports;
  /// Final store of this replica, including its published winners.
  store::SystemStore store;
  /// Main-path validation accuracy, the floor every winner starts from.
  double main_validation = 0.0;
  double main_test = 0.0;
};

std::uint64_t replica_seed(std::uint64_t base, std::size_t replica);

struct ReplicaOptions {
  /// When set, each replica saves its store checkpoint and agent state to
  /// <state_dir>/replica_<r>/ after every cycle.
  std::string state_dir;
  /// Continue replicas from their saved state instead of starting over.
  bool resume = false;
  std::function<void(std::size_t replica, const CycleReport&)> on_cycle;
};

/// Runs `n` independent agents, each on its own copy of `seeded`, with
/// seeds replica_seed(config.seed, r).
std::vector<ReplicaResult> run_replicas(const store::SystemStore& seeded, store::DatasetRegistry& datasets,
                                        const AgentConfig& config, std::size_t n, const ReplicaOptions& options = {});

}  // namespace mpath::evo

#endif  // MPATH_EVO_REPLICAS_HPP_

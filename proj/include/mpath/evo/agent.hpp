#ifndef MPATH_EVO_AGENT_HPP_
#define MPATH_EVO_AGENT_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mpath/arch/multipath.hpp"
#include "mpath/rng.hpp"
#include "mpath/store/serialization.hpp"
#include "mpath/train/trainer.hpp"

namespace mpath::evo {

enum class AblationMode { none, standard_aggregation, sum_aggregation, zero_bias_init, unit_lr_multiplier };

/// Command-line spelling, e.g. "sum-aggregation".
std::string_view ablation_name(AblationMode mode);
/// Throws ConfigError for unknown names.
AblationMode parse_ablation(std::string_view name);

struct AgentConfig {
  std::string target_task;
  /// Empty: the first published path of the target task.
  std::string main_path_id;
  std::size_t cycles = 15;
  std::size_t samples_per_cycle = 16;
  std::size_t workers = 4;
  std::size_t max_paths = 3;
  std::size_t default_num_paths = 2;
  std::vector<std::string> support_path_exclusions;
  std::optional<std::string> forced_first_support;
  AblationMode ablation = AblationMode::none;
  double mutation_probability = 0.25;
  double w_main_star = 0.8;
  train::TrainBudget budget;
  std::uint64_t seed = 0;
  /// Sampled model ids are "<prefix>.c<cycle>.s<k>"; empty means the target task.
  std::string model_prefix;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  /// Routing implied by the ablation mode.
  arch::RouterOptions routing() const;
};

store::Json config_to_json(const AgentConfig& c);
AgentConfig config_from_json(const store::Json& j);

/// Scored candidates, best first; equal scores keep creation order.
class Population {
 public:
  struct Entry {
    arch::MultipathModel model;
    std::size_t creation_index = 0;
  };

  void insert(arch::MultipathModel model, std::size_t creation_index);
  void sort();
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  Entry& operator[](std::size_t i) { return entries_[i]; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  /// Index of the entry holding `model_id`, if any.
  std::optional<std::size_t> find(const std::string& model_id) const;

 private:
  std::vector<Entry> entries_;
};

/// Visits entries best first and accepts each with probability
/// 0.5^num_offsprings. nullopt means "start from a random model".
std::optional<std::size_t> select_parent(const Population& population, Rng& rng);

/// Closed-form acceptance probabilities of select_parent; the last element
/// is the probability of the random-init outcome.
std::vector<double> selection_probabilities(const Population& population);

/// Paths that may serve as support for the configured target.
std::vector<std::string> eligible_support_paths(const store::SystemStore& store, const AgentConfig& config,
                                                const std::string& main_path_id);

std::string resolve_main_path(const store::SystemStore& store, const AgentConfig& config);

arch::MultipathModel random_init_model(const Population& population, const store::SystemStore& store,
                                       const AgentConfig& config, Rng& rng, const std::string& model_id);

/// Child of `parent` with at least one mutation applied. Increments
/// parent.num_offsprings.
arch::MultipathModel mutate(arch::MultipathModel& parent, const store::SystemStore& store, const AgentConfig& config,
                            Rng& rng, const std::string& child_id);

/// Support paths plus hyperparameters; used to avoid training duplicates.
std::string genome_key(const arch::MultipathModel& model);

struct CycleReport {
  std::size_t cycle = 0;
  std::string winner_id;
  double best_validation = 0.0;
  double test_accuracy = 0.0;
  std::size_t population_size = 0;
  /// Mean validation routing weight of the main path in the winner.
  double main_weight = 0.0;
  std::size_t support_count = 0;

  friend bool operator==(const CycleReport&, const CycleReport&) = default;
};

inline constexpr const char* kCycleReportHeader =
    "cycle\twinner\tbest_validation\ttest_accuracy\tpopulation\tmain_weight\tsupports";
std::string format_report_row(const CycleReport& r);

class Agent {
 public:
  explicit Agent(AgentConfig config);

  /// Samples, trains and scores one cycle of models, prunes children that did
  /// not beat their parent and publishes the best model so far to `store`.
  CycleReport run_cycle(store::SystemStore& store, train::TrainContext& ctx);

  /// Runs the remaining configured cycles. Reports accumulate in reports().
  void run(store::SystemStore& store, train::TrainContext& ctx, std::ostream* log = nullptr);

  const AgentConfig& config() const noexcept { return config_; }
  const Population& population() const noexcept { return population_; }
  const std::vector<CycleReport>& reports() const noexcept { return reports_; }
  std::size_t cycles_done() const noexcept { return reports_.size(); }

  /// Full agent state: config, population with parameters, RNG, counters.
  store::Json save_state() const;
  static Agent load_state(const store::Json& j);

 private:
  struct Candidate {
    arch::MultipathModel model;
    std::optional<double> parent_score;
    std::size_t creation_index = 0;
  };

  Candidate sample(const store::SystemStore& store, const std::string& model_id);

  AgentConfig config_;
  Population population_;
  std::set<std::string> seen_genomes_;
  std::vector<CycleReport> reports_;
  std::size_t created_ = 0;
  Rng rng_;
};

}  // namespace mpath::evo

#endif  // MPATH_EVO_AGENT_HPP_

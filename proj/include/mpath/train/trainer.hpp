#ifndef MPATH_TRAIN_TRAINER_HPP_
#define MPATH_TRAIN_TRAINER_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mpath/arch/multipath.hpp"
#include "mpath/store/cache.hpp"
#include "mpath/store/store.hpp"

namespace mpath::train {

inline constexpr std::size_t kNumEvaluations = 4;

struct TrainBudget {
  std::size_t train_steps = 2000;
  std::size_t batch_size = 32;
};

/// Shared read-only inputs of a training run.
struct TrainContext {
  const store::SystemStore& store;
  store::RepresentationCache& cache;
  store::DatasetRegistry& datasets;
  std::uint64_t seed = 0;
};

struct ScoreRecord {
  std::vector<std::size_t> eval_steps;
  std::vector<double> eval_accuracies;
  std::size_t best_eval_index = 0;
  double score = 0.0;
  /// Trainable parameters at the best evaluation.
  std::vector<store::ModuleDef> best_connectors;
  std::optional<store::ModuleDef> best_router;
  std::vector<double> best_ema;
  /// Optimizer state keys ("<module_id>.kernel" / ".bias") of the run.
  std::vector<std::string> trained_parameters;
  bool diverged = false;
  std::string diagnostic;
  std::optional<double> test_accuracy;
};

/// Copies the retained parameters and score of `record` into `model`.
void apply_checkpoint(arch::MultipathModel& model, const ScoreRecord& record);

/// Trains connectors and router on the task's train split and scores the
/// model as the best of kNumEvaluations evenly spaced validation accuracies.
/// Deterministic given (context seed, model id). When `log` is set, one TSV
/// line "model_id step loss lr" is written per step.
ScoreRecord train_and_score(const arch::MultipathModel& model, TrainContext& ctx, const TrainBudget& budget,
                            std::ostream* log = nullptr);

/// Index of the largest entry of a row; ties go to the lowest index.
std::size_t argmax_row(const ad::Tensor& logits, std::size_t row);

/// Fraction of rows whose argmax equals the label.
double accuracy(const ad::Tensor& logits, std::span<const int> labels);

/// Accuracy of a multipath model on a whole split (eval-mode inputs).
double evaluate(const arch::MultipathModel& model, TrainContext& ctx, data::Split split);

/// Accuracy of a single stored path on a task split.
double evaluate_path(const std::string& path_id, const std::string& task_id, TrainContext& ctx, data::Split split);

/// Per-path routing weights averaged over a split. Uniform-ones when the
/// model has no router.
std::vector<double> mean_routing_weights(const arch::MultipathModel& model, TrainContext& ctx, data::Split split);

}  // namespace mpath::train

#endif  // MPATH_TRAIN_TRAINER_HPP_

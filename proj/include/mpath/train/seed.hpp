#ifndef MPATH_TRAIN_SEED_HPP_
#define MPATH_TRAIN_SEED_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "mpath/data/preprocess.hpp"
#include "mpath/store/cache.hpp"
#include "mpath/store/store.hpp"
#include "mpath/train/optim.hpp"

namespace mpath::train {

/// Settings of the single-path trainer that seeds a store with baseline paths.
struct SeedConfig {
  std::string base_task;
  std::vector<std::size_t> hidden{64};
  std::size_t base_steps = 1500;
  std::size_t finetune_steps = 600;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  bool nesterov = true;
  double warmup_ratio = 0.05;
  data::PreprocessConfig preprocess;
  std::uint64_t seed = 0;
};

struct PathTrainSpec {
  std::size_t resolution = 0;
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::size_t batch_size = 32;
  SgdConfig sgd;
  double warmup_ratio = 0.0;
  data::PreprocessConfig preprocess;
};

/// Trains the non-frozen modules of a chain on a split with cross-entropy.
/// Returns the mean loss of the last 10% of steps.
double train_chain(std::vector<store::ModuleDef>& modules, const data::SplitData& train, const PathTrainSpec& spec,
                   Rng& rng);

/// Logits of a chain for a split, eval mode.
ad::Tensor chain_logits(const std::vector<store::ModuleDef>& modules, const data::SplitData& split,
                        std::size_t resolution, std::size_t channels);

/// Id under which seed_store publishes the path of a task.
inline std::string seeded_path_id(const std::string& task_id) { return task_id + ".path"; }

struct SeededPath {
  std::string task_id;
  std::string path_id;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Trains a trunk on the base task and publishes one frozen path per task:
/// the base path itself, and for every other task a fine-tuned clone of the
/// trunk with a fresh head (lineage recorded in parent_module_id). Throws
/// StoreError when any of the tasks already has a path.
std::vector<SeededPath> seed_store(store::SystemStore& store, store::DatasetRegistry& datasets,
                                   const SeedConfig& config, const std::vector<std::string>& task_ids);

}  // namespace mpath::train

#endif  // MPATH_TRAIN_SEED_HPP_

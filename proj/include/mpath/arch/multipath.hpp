#ifndef MPATH_ARCH_MULTIPATH_HPP_
#define MPATH_ARCH_MULTIPATH_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpath/arch/aggregation.hpp"
#include "mpath/autodiff/tape.hpp"
#include "mpath/data/image.hpp"
#include "mpath/data/task.hpp"
#include "mpath/store/cache.hpp"
#include "mpath/store/store.hpp"
#include "mpath/train/hyperparams.hpp"

namespace mpath::arch {

struct RouterOptions {
  AggregationMode aggregation = AggregationMode::decoupled;
  double w_main_star = 0.8;
  /// All router parameters start at zero (uniform weights) instead of the
  /// closed-form bias.
  bool zero_bias_init = false;
};

/// A candidate model: frozen main and support paths from the store plus its
/// own trainable connectors and router.
struct MultipathModel {
  std::string model_id;
  std::string task_id;
  std::string main_path_id;
  std::vector<std::string> support_path_ids;
  std::vector<store::ModuleDef> connectors;
  std::optional<store::ModuleDef> router;
  RouterOptions routing;
  /// Moving averages of the routing weights, one per path.
  std::vector<double> ema;
  train::Hyperparams hyperparams;
  std::optional<double> score;
  std::optional<std::string> parent_id;
  int num_offsprings = 0;

  std::size_t num_paths() const noexcept { return 1 + support_path_ids.size(); }
  /// Main path first, then supports.
  std::vector<std::string> path_ids() const;
};

inline constexpr double kEmaDecay = 0.99;

/// One step of the per-path moving average with the batch-mean weights.
void update_ema(std::vector<double>& ema, const ad::Tensor& weights, double decay = kEmaDecay);

std::string connector_id(const std::string& model_id, std::size_t index);
std::string router_id(const std::string& model_id);

/// Zero-initialized connector from a support path's logits to the target logits.
store::ModuleDef make_connector(std::string id, std::size_t in, std::size_t out);

/// Builds a fresh model with zero connectors and an initialized router.
/// Throws ValueError when the structure is invalid (see validate_model).
MultipathModel make_multipath(std::string model_id, const store::SystemStore& store, const std::string& task_id,
                              const std::string& main_path_id, std::vector<std::string> support_path_ids,
                              const RouterOptions& routing, train::Hyperparams hyperparams,
                              std::size_t max_paths = 3);

/// Throws ValueError unless 2 <= |P| <= max_paths, paths exist and are
/// distinct, the main path solves the task, and module shapes line up.
void validate_model(const MultipathModel& model, const store::SystemStore& store, std::size_t max_paths);

/// Re-creates the router for the current path count and resets the EMA state.
void reset_router(MultipathModel& model, const store::SystemStore& store);

/// Routing weights implied by the router bias alone.
std::vector<double> prior_weights(const MultipathModel& model);

/// Frozen path logits for one batch: main [b x c] and one tensor per support.
struct PathInputs {
  ad::Tensor main;
  std::vector<ad::Tensor> support;
};

PathInputs gather_inputs(store::RepresentationCache& cache, const MultipathModel& model, data::Split split,
                         std::span<const std::size_t> indices);
/// Same as gather_inputs for raw images, bypassing the cache.
PathInputs compute_inputs(const store::SystemStore& store, const MultipathModel& model,
                          std::span<const data::Image* const> images);

struct MultipathForward {
  ad::Var logits;
  std::optional<ad::Var> weights;
  std::vector<store::ModuleVars> connectors;
  std::optional<store::ModuleVars> router;
};

/// Records the multipath forward on a tape. Connectors and router are
/// parameters unless frozen; path logits enter as constants.
MultipathForward assemble_and_forward(ad::Tape& tape, const MultipathModel& model, const PathInputs& inputs);

/// Tape-free logits, for evaluation.
ad::Tensor multipath_logits(const MultipathModel& model, const PathInputs& inputs);

/// Published representation and its connector/router modules.
std::pair<store::PublishedModel, std::vector<store::ModuleDef>> to_published(const MultipathModel& model);
/// Rebuilds a (frozen) model from the store.
MultipathModel from_published(const store::SystemStore& store, const std::string& model_id);

}  // namespace mpath::arch

#endif  // MPATH_ARCH_MULTIPATH_HPP_

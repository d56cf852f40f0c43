#ifndef MPATH_STORE_STORE_HPP_
#define MPATH_STORE_STORE_HPP_

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mpath/arch/aggregation.hpp"
#include "mpath/data/task.hpp"
#include "mpath/store/module.hpp"
#include "mpath/train/hyperparams.hpp"

namespace mpath::store {

/// Ordered module chain ending in a task head.
struct PathSpec {
  std::string path_id;
  std::string task_id;
  std::vector<std::string> module_ids;
  std::size_t input_resolution = 0;
  std::size_t channels = 0;

  std::size_t input_dim() const { return input_resolution * input_resolution * channels; }

  friend bool operator==(const PathSpec&, const PathSpec&) = default;
};

/// A multipath model retained in the system. Connector and router parameters
/// are stored as frozen modules referenced by id.
struct PublishedModel {
  std::string model_id;
  std::string task_id;
  std::string main_path_id;
  std::vector<std::string> support_path_ids;
  std::vector<std::string> connector_ids;
  std::optional<std::string> router_id;
  arch::AggregationMode aggregation = arch::AggregationMode::decoupled;
  double w_main_star = 0.8;
  bool zero_bias_init = false;
  std::vector<double> ema;
  train::Hyperparams hyperparams;
  double validation_score = 0.0;
  std::optional<double> test_accuracy;
  std::optional<std::string> parent_id;

  friend bool operator==(const PublishedModel&, const PublishedModel&) = default;
};

/// The persistent system of tasks, frozen modules, single paths and published
/// multipath models. Many concurrent readers, one writer. Entries are never
/// removed, and published modules are immutable, so references returned by
/// the accessors stay valid for the store's lifetime.
class SystemStore {
 public:
  SystemStore() = default;
  SystemStore(const SystemStore& other);
  SystemStore& operator=(const SystemStore& other);

  void register_task(data::TaskSpec task);
  bool has_task(const std::string& task_id) const;
  const data::TaskSpec& task(const std::string& task_id) const;
  std::vector<std::string> task_ids() const;

  /// Stores `new_modules` frozen and the path referencing them (plus any
  /// already stored modules). Returns the path id.
  std::string publish_path(PathSpec path, std::vector<ModuleDef> new_modules);

  /// Stores a multipath model together with its connector/router modules.
  void publish_model(PublishedModel model, std::vector<ModuleDef> modules);

  bool has_module(const std::string& id) const;
  const ModuleDef& module(const std::string& id) const;
  std::shared_ptr<const ModuleDef> module_ptr(const std::string& id) const;
  std::vector<std::string> module_ids() const;

  bool has_path(const std::string& id) const;
  const PathSpec& path(const std::string& id) const;
  /// Path ids in publication order.
  std::vector<std::string> path_ids() const;
  std::vector<std::string> paths_for_task(const std::string& task_id) const;

  bool has_model(const std::string& id) const;
  const PublishedModel& model(const std::string& id) const;
  std::vector<std::string> model_ids() const;

  /// Number of paths and published models that reference a module.
  std::size_t referer_count(const std::string& module_id) const;

  /// Content equality: tasks, modules (bitwise tensors), paths, models.
  bool equals(const SystemStore& other) const;

 private:
  void check_fresh_module(const ModuleDef& m) const;

  mutable std::shared_mutex mutex_;
  std::map<std::string, data::TaskSpec> tasks_;
  std::vector<std::string> task_order_;
  std::map<std::string, std::shared_ptr<const ModuleDef>> modules_;
  std::vector<std::string> module_order_;
  std::map<std::string, PathSpec> paths_;
  std::vector<std::string> path_order_;
  std::map<std::string, PublishedModel> models_;
  std::vector<std::string> model_order_;
};

}  // namespace mpath::store

#endif  // MPATH_STORE_STORE_HPP_

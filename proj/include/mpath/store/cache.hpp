#ifndef MPATH_STORE_CACHE_HPP_
#define MPATH_STORE_CACHE_HPP_

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mpath/autodiff/tensor.hpp"
#include "mpath/data/task.hpp"
#include "mpath/store/store.hpp"

namespace mpath::store {

/// Lazily materialized datasets, shared read-only between workers.
class DatasetRegistry {
 public:
  /// Builds the dataset on first use.
  std::shared_ptr<const data::Dataset> get(const data::TaskSpec& spec);

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const data::Dataset>> datasets_;
};

/// Memoized logits of frozen paths on samples of a task. Entries are keyed by
/// (path, task, split, sample index); inputs use eval-mode preprocessing and
/// are fitted to the path's resolution and channels.
///
/// Concurrent readers are allowed; writers insert identical values, so the
/// last write wins harmlessly.
class RepresentationCache {
 public:
  RepresentationCache(const SystemStore& store, DatasetRegistry& datasets) : store_(store), datasets_(datasets) {}

  /// Logits row [num_classes of the path] for one sample. Throws StoreError
  /// for an unknown path or task.
  ad::Tensor get_or_compute(const std::string& path_id, const std::string& task_id, data::Split split,
                            std::size_t index);

  /// Stacked logits [indices.size() x c]; misses are computed in one batch.
  ad::Tensor get_rows(const std::string& path_id, const std::string& task_id, data::Split split,
                      std::span<const std::size_t> indices);

  std::size_t hits() const noexcept { return hits_.load(); }
  std::size_t misses() const noexcept { return misses_.load(); }
  std::size_t size() const;
  void reset_counters() noexcept;

 private:
  using Key = std::tuple<std::string, std::string, data::Split>;
  /// Rows of one (path, task, split) block; `present` marks computed rows.
  struct Block {
    std::size_t width = 0;
    std::vector<double> rows;
    std::vector<char> present;
    std::size_t count = 0;
  };

  Block& block(const std::string& path_id, const std::string& task_id, data::Split split);

  const SystemStore& store_;
  DatasetRegistry& datasets_;
  mutable std::shared_mutex mutex_;
  std::map<Key, std::unique_ptr<Block>> blocks_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace mpath::store

#endif  // MPATH_STORE_CACHE_HPP_

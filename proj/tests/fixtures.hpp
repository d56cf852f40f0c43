#ifndef MPATH_TESTS_FIXTURES_HPP_
#define MPATH_TESTS_FIXTURES_HPP_

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "mpath/data/task.hpp"
#include "mpath/rng.hpp"
#include "mpath/store/store.hpp"

namespace mpath::testing {

inline data::TaskSpec small_task(const std::string& id, std::uint64_t seed, std::size_t classes = 4,
                                 std::size_t res = 8, data::SplitSizes splits = {64, 32, 32},
                                 std::vector<int> textures = {0, 1}) {
  data::TaskSpec spec;
  spec.task_id = id;
  spec.num_classes = classes;
  spec.resolution = res;
  spec.channels = 3;
  data::SyntheticFamily fam;
  fam.seed = seed;
  for (std::size_t k = 0; k < classes; ++k) fam.class_shapes.push_back(static_cast<int>(k));
  fam.textures = std::move(textures);
  spec.source = fam;
  spec.splits = splits;
  return spec;
}

/// Publishes a path [trunk (new or existing dense module), head] with random weights.
inline void publish_simple_path(store::SystemStore& s, const std::string& path_id, const std::string& task_id,
                                const std::string& trunk_id, std::size_t hidden, Rng& rng) {
  const auto& task = s.task(task_id);
  const std::size_t in = task.resolution * task.resolution * task.channels;
  std::vector<store::ModuleDef> fresh;
  if (!s.has_module(trunk_id)) {
    auto trunk = store::make_random_module(trunk_id, store::ModuleKind::dense, in, hidden, rng);
    trunk.last_trained_task = task_id;
    fresh.push_back(std::move(trunk));
  }
  auto head = store::make_random_module(path_id + ".head", store::ModuleKind::head, hidden, task.num_classes, rng);
  head.last_trained_task = task_id;
  fresh.push_back(std::move(head));
  store::PathSpec p{path_id, task_id, {trunk_id, path_id + ".head"}, task.resolution, task.channels};
  s.publish_path(std::move(p), std::move(fresh));
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mpath_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace mpath::testing

#endif  // MPATH_TESTS_FIXTURES_HPP_

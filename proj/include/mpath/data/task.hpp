#ifndef MPATH_DATA_TASK_HPP_
#define MPATH_DATA_TASK_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mpath/data/image.hpp"

namespace mpath::data {

enum class Split { train, validation, test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

/// Parameters of the procedural shape/texture task family.
///
/// The class of a sample is determined only by its shape. Textures and colors
/// are nuisance factors drawn per sample, so tasks that share a shape
/// vocabulary but differ in texture vocabulary exercise transferable features.
struct SyntheticFamily {
  std::uint64_t seed = 0;
  /// Shape id (0..kNumShapes-1) of each class; size equals num_classes.
  std::vector<int> class_shapes;
  /// Texture ids (0..kNumTextures-1) that samples of this task may use.
  std::vector<int> textures;
  /// Foreground hue range in [0, 1).
  double hue_min = 0.0;
  double hue_max = 1.0;
  /// Standard deviation of additive per-pixel gaussian noise.
  double noise = 0.05;
  /// Shape size as a fraction of the image side.
  double size_min = 0.35;
  double size_max = 0.6;

  static constexpr int kNumShapes = 8;
  static constexpr int kNumTextures = 6;
};

struct IdxSource {
  std::string images_path;
  std::string labels_path;
  /// Seed of the deterministic split permutation.
  std::uint64_t seed = 0;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct TaskSpec {
  std::string task_id;
  std::size_t num_classes = 0;
  std::size_t resolution = 0;
  std::size_t channels = 0;
  std::variant<SyntheticFamily, IdxSource> source;
  SplitSizes splits;

  /// Throws ValueError when any invariant is broken.
  void validate() const;
};

struct SplitData {
  std::vector<Image> images;
  std::vector<int> labels;
  std::size_t size() const noexcept { return labels.size(); }
};

/// Materialized, immutable samples of one task.
struct Dataset {
  TaskSpec spec;
  SplitData train;
  SplitData validation;
  SplitData test;

  const SplitData& split(Split s) const;
};

/// Renders every split of a synthetic task. Identical specs give bitwise
/// identical datasets.
Dataset generate_synthetic_task(const TaskSpec& spec);

/// Renders one sample of the synthetic family.
Image render_synthetic_sample(const SyntheticFamily& family, std::size_t resolution, std::size_t channels, int label,
                              std::uint64_t sample_seed);

/// Builds the dataset for any task source (synthetic or IDX files).
Dataset build_dataset(const TaskSpec& spec);

/// Per-class sample counts of a split.
std::vector<std::size_t> class_histogram(const SplitData& split, std::size_t num_classes);

}  // namespace mpath::data

#endif  // MPATH_DATA_TASK_HPP_

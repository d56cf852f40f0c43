#ifndef MPATH_TRAIN_HYPERPARAMS_HPP_
#define MPATH_TRAIN_HYPERPARAMS_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "mpath/data/preprocess.hpp"

namespace mpath::train {

// Admissible optimizer values, in search order. Defaults are marked in Hyperparams.
inline constexpr std::array<double, 12> kLearningRateValues{0.0001, 0.0002, 0.0005, 0.001, 0.002, 0.005,
                                                            0.01,   0.02,   0.05,   0.1,   0.2,   0.5};
inline constexpr std::array<double, 7> kWarmupRatioValues{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
inline constexpr std::array<double, 10> kMomentumValues{0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.98, 0.99};
inline constexpr std::array<double, 7> kRouterLrMultiplierValues{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
inline constexpr std::array<double, 2> kBoolValues{0.0, 1.0};

/// Tunable configuration of a sampled model.
struct Hyperparams {
  double learning_rate = 0.02;
  double warmup_ratio = 0.02;
  double momentum = 0.8;
  bool nesterov = true;
  double router_lr_multiplier = 0.05;
  data::PreprocessConfig preprocess;

  /// Throws ValueError when a tunable field is outside its value list.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

enum class HyperparamField {
  learning_rate,
  warmup_ratio,
  momentum,
  nesterov,
  router_lr_multiplier,
  cropped_area_range_min,
  cropped_aspect_ratio_range_min,
  flip_left_right,
  brightness_delta,
  contrast_delta,
  saturation_delta,
  hue_delta,
  image_quality_delta,
};

inline constexpr std::array<HyperparamField, 13> kAllHyperparamFields{
    HyperparamField::learning_rate,          HyperparamField::warmup_ratio,
    HyperparamField::momentum,               HyperparamField::nesterov,
    HyperparamField::router_lr_multiplier,   HyperparamField::cropped_area_range_min,
    HyperparamField::cropped_aspect_ratio_range_min, HyperparamField::flip_left_right,
    HyperparamField::brightness_delta,       HyperparamField::contrast_delta,
    HyperparamField::saturation_delta,       HyperparamField::hue_delta,
    HyperparamField::image_quality_delta,
};

std::string_view field_name(HyperparamField field);
HyperparamField parse_field(std::string_view name);

/// Ordered admissible values; booleans are encoded as {0, 1}.
std::span<const double> field_values(HyperparamField field);
double get_field(const Hyperparams& hp, HyperparamField field);
void set_field(Hyperparams& hp, HyperparamField field, double value);
/// Position of the current value in its list; throws ValueError if absent.
std::size_t field_index(const Hyperparams& hp, HyperparamField field);

std::string describe(const Hyperparams& hp);

}  // namespace mpath::train

#endif  // MPATH_TRAIN_HYPERPARAMS_HPP_

#include "mpath/train/hyperparams.hpp"

#include <algorithm>
#include <sstream>

#include "mpath/errors.hpp"

namespace mpath::train {

std::string_view field_name(HyperparamField field) {
  switch (field) {
    case HyperparamField::learning_rate:
      return "learning_rate";
    case HyperparamField::warmup_ratio:
      return "warmup_ratio";
    case HyperparamField::momentum:
      return "momentum";
    case HyperparamField::nesterov:
      return "nesterov";
    case HyperparamField::router_lr_multiplier:
      return "router_lr_multiplier";
    case HyperparamField::cropped_area_range_min:
      return "cropped_area_range_min";
    case HyperparamField::cropped_aspect_ratio_range_min:
      return "cropped_aspect_ratio_range_min";
    case HyperparamField::flip_left_right:
      return "flip_left_right";
    case HyperparamField::brightness_delta:
      return "brightness_delta";
    case HyperparamField::contrast_delta:
      return "contrast_delta";
    case HyperparamField::saturation_delta:
      return "saturation_delta";
    case HyperparamField::hue_delta:
      return "hue_delta";
    case HyperparamField::image_quality_delta:
      return "image_quality_delta";
  }
  return "?";
}

HyperparamField parse_field(std::string_view name) {
  for (HyperparamField f : kAllHyperparamFields)
    if (field_name(f) == name) return f;
  throw ValueError("unknown hyperparameter '" + std::string(name) + "'");
}

std::span<const double> field_values(HyperparamField field) {
  switch (field) {
    case HyperparamField::learning_rate:
      return kLearningRateValues;
    case HyperparamField::warmup_ratio:
      return kWarmupRatioValues;
    case HyperparamField::momentum:
      return kMomentumValues;
    case HyperparamField::router_lr_multiplier:
      return kRouterLrMultiplierValues;
    case HyperparamField::nesterov:
    case HyperparamField::flip_left_right:
      return kBoolValues;
    case HyperparamField::cropped_area_range_min:
      return data::kCropAreaMinValues;
    case HyperparamField::cropped_aspect_ratio_range_min:
      return data::kAspectRatioMinValues;
    case HyperparamField::brightness_delta:
    case HyperparamField::contrast_delta:
    case HyperparamField::saturation_delta:
    case HyperparamField::hue_delta:
    case HyperparamField::image_quality_delta:
      return data::kDeltaValues;
  }
  throw ValueError("bad hyperparameter field");
}

double get_field(const Hyperparams& hp, HyperparamField field) {
  const auto& pp = hp.preprocess;
  switch (field) {
    case HyperparamField::learning_rate:
      return hp.learning_rate;
    case HyperparamField::warmup_ratio:
      return hp.warmup_ratio;
    case HyperparamField::momentum:
      return hp.momentum;
    case HyperparamField::nesterov:
      return hp.nesterov ? 1.0 : 0.0;
    case HyperparamField::router_lr_multiplier:
      return hp.router_lr_multiplier;
    case HyperparamField::cropped_area_range_min:
      return pp.cropped_area_range_min;
    case HyperparamField::cropped_aspect_ratio_range_min:
      return pp.cropped_aspect_ratio_range_min;
    case HyperparamField::flip_left_right:
      return pp.flip_left_right ? 1.0 : 0.0;
    case HyperparamField::brightness_delta:
      return pp.brightness_delta;
    case HyperparamField::contrast_delta:
      return pp.contrast_delta;
    case HyperparamField::saturation_delta:
      return pp.saturation_delta;
    case HyperparamField::hue_delta:
      return pp.hue_delta;
    case HyperparamField::image_quality_delta:
      return pp.image_quality_delta;
  }
  throw ValueError("bad hyperparameter field");
}

void set_field(Hyperparams& hp, HyperparamField field, double value) {
  auto& pp = hp.preprocess;
  switch (field) {
    case HyperparamField::learning_rate:
      hp.learning_rate = value;
      return;
    case HyperparamField::warmup_ratio:
      hp.warmup_ratio = value;
      return;
    case HyperparamField::momentum:
      hp.momentum = value;
      return;
    case HyperparamField::nesterov:
      hp.nesterov = value != 0.0;
      return;
    case HyperparamField::router_lr_multiplier:
      hp.router_lr_multiplier = value;
      return;
    case HyperparamField::cropped_area_range_min:
      pp.cropped_area_range_min = value;
      return;
    case HyperparamField::cropped_aspect_ratio_range_min:
      pp.cropped_aspect_ratio_range_min = value;
      return;
    case HyperparamField::flip_left_right:
      pp.flip_left_right = value != 0.0;
      return;
    case HyperparamField::brightness_delta:
      pp.brightness_delta = value;
      return;
    case HyperparamField::contrast_delta:
      pp.contrast_delta = value;
      return;
    case HyperparamField::saturation_delta:
      pp.saturation_delta = value;
      return;
    case HyperparamField::hue_delta:
      pp.hue_delta = value;
      return;
    case HyperparamField::image_quality_delta:
      pp.image_quality_delta = value;
      return;
  }
}

std::size_t field_index(const Hyperparams& hp, HyperparamField field) {
  const auto values = field_values(field);
  const double v = get_field(hp, field);
  const auto it = std::find(values.begin(), values.end(), v);
  if (it == values.end())
    throw ValueError(std::string(field_name(field)) + " = " + std::to_string(v) + " is not an admissible value");
  return static_cast<std::size_t>(it - values.begin());
}

void Hyperparams::validate() const {
  for (HyperparamField f : kAllHyperparamFields) field_index(*this, f);
}

std::string describe(const Hyperparams& hp) {
  std::ostringstream os;
  bool first = true;
  for (HyperparamField f : kAllHyperparamFields) {
    if (!first) os << ' ';
    first = false;
    os << field_name(f) << '=' << get_field(hp, f);
  }
  return os.str();
}

}  // namespace mpath::train

#ifndef MPATH_DATA_PREPROCESS_HPP_
#define MPATH_DATA_PREPROCESS_HPP_

#include <array>
#include <string>
#include <vector>

#include "mpath/data/image.hpp"
#include "mpath/rng.hpp"

namespace mpath::data {

// Admissible values of each preprocessing hyperparameter, in search order.
inline constexpr std::array<double, 4> kCropAreaMinValues{0.05, 0.5, 0.95, 1.0};
inline constexpr std::array<double, 3> kAspectRatioMinValues{0.5, 0.75, 1.0};
inline constexpr std::array<double, 6> kDeltaValues{0.0, 0.01, 0.02, 0.05, 0.1, 0.2};

struct PreprocessConfig {
  double cropped_area_range_min = 1.0;
  double cropped_aspect_ratio_range_min = 1.0;
  bool flip_left_right = false;
  double brightness_delta = 0.0;
  double contrast_delta = 0.0;
  double saturation_delta = 0.0;
  double hue_delta = 0.0;
  double image_quality_delta = 0.0;

  /// Throws ValueError if any field is not one of its admissible values.
  void validate() const;

  friend bool operator==(const PreprocessConfig&, const PreprocessConfig&) = default;
};

/// Bilinear resampling with half-pixel centers and edge clamping.
Image resize(const Image& image, std::size_t height, std::size_t width);
inline Image resize(const Image& image, std::size_t resolution) { return resize(image, resolution, resolution); }

/// Grayscale -> RGB replicates the channel; RGB -> grayscale averages.
Image adapt_channels(const Image& image, std::size_t channels);

/// Resize + channel adaptation to what a path expects.
Image fit_to(const Image& image, std::size_t resolution, std::size_t channels);

/// Random crop/flip/color jitter in train mode; identity in eval mode.
/// The crop is resized back to the input resolution.
Image preprocess(const Image& image, const PreprocessConfig& config, Rng& rng, bool train_mode);

/// Describes operations that degrade to a no-op or approximation for an image
/// with `channels` channels. Logged once at the start of a run.
std::vector<std::string> preprocess_notes(const PreprocessConfig& config, std::size_t channels);

}  // namespace mpath::data

#endif  // MPATH_DATA_PREPROCESS_HPP_

#include "mpath/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpath/errors.hpp"

namespace mpath::data {

namespace {

template <std::size_t N>
bool member(double value, const std::array<double, N>& values) {
  return std::find(values.begin(), values.end(), value) != values.end();
}

void require_member(double value, const auto& values, const char* name) {
  if (!member(value, values)) throw ValueError(std::string(name) + " = " + std::to_string(value) + " is not admissible");
}

Image crop(const Image& image, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  Image out(h, w, image.channels);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < image.channels; ++c) out.at(y, x, c) = image.at(top + y, left + x, c);
  return out;
}

struct CropBox {
  std::size_t top, left, height, width;
};

// Area fraction ~ U[area_min, 1], aspect ratio log-uniform in [ratio_min, 1/ratio_min].
// When one side overflows the image it is clamped and the other side grows so
// the sampled area is still covered.
CropBox sample_crop(std::size_t H, std::size_t W, double area_min, double ratio_min, Rng& rng) {
  const double area = rng.uniform(area_min, 1.0) * static_cast<double>(H * W);
  const double log_lo = std::log(ratio_min), log_hi = -std::log(ratio_min);
  const double ratio = std::exp(rng.uniform(log_lo, log_hi));
  double w = std::round(std::sqrt(area * ratio));
  double h = std::round(std::sqrt(area / ratio));
  if (w > static_cast<double>(W)) {
    w = static_cast<double>(W);
    h = std::ceil(area / w);
  }
  if (h > static_cast<double>(H)) {
    h = static_cast<double>(H);
    w = std::min(static_cast<double>(W), std::ceil(area / h));
  }
  CropBox box;
  box.height = std::max<std::size_t>(1, static_cast<std::size_t>(h));
  box.width = std::max<std::size_t>(1, static_cast<std::size_t>(w));
  box.top = rng.index(H - box.height + 1);
  box.left = rng.index(W - box.width + 1);
  return box;
}

void flip_horizontal(Image& img) {
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width / 2; ++x)
      for (std::size_t c = 0; c < img.channels; ++c) std::swap(img.at(y, x, c), img.at(y, img.width - 1 - x, c));
}

void adjust_contrast(Image& img, double factor) {
  const std::size_t n = img.height * img.width;
  for (std::size_t c = 0; c < img.channels; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += img.pixels[i * img.channels + c];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      double& p = img.pixels[i * img.channels + c];
      p = (p - mean) * factor + mean;
    }
  }
}

void adjust_saturation(Image& img, double factor) {
  for (std::size_t i = 0; i < img.height * img.width; ++i) {
    double* p = &img.pixels[i * 3];
    const double gray = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    for (int c = 0; c < 3; ++c) p[c] = gray + (p[c] - gray) * factor;
  }
}

// Hue rotation in YIQ space by `turns` of a full circle.
void adjust_hue(Image& img, double turns) {
  const double theta = 2.0 * std::numbers::pi * turns;
  const double cs = std::cos(theta), sn = std::sin(theta);
  for (std::size_t i = 0; i < img.height * img.width; ++i) {
    double* p = &img.pixels[i * 3];
    const double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    const double ii = 0.596 * p[0] - 0.274 * p[1] - 0.322 * p[2];
    const double q = 0.211 * p[0] - 0.523 * p[1] + 0.312 * p[2];
    const double i2 = ii * cs - q * sn;
    const double q2 = ii * sn + q * cs;
    p[0] = y + 0.956 * i2 + 0.621 * q2;
    p[1] = y - 0.272 * i2 - 0.647 * q2;
    p[2] = y - 1.106 * i2 + 1.703 * q2;
  }
}

}  // namespace

void PreprocessConfig::validate() const {
  require_member(cropped_area_range_min, kCropAreaMinValues, "cropped_area_range_min");
  require_member(cropped_aspect_ratio_range_min, kAspectRatioMinValues, "cropped_aspect_ratio_range_min");
  require_member(brightness_delta, kDeltaValues, "brightness_delta");
  require_member(contrast_delta, kDeltaValues, "contrast_delta");
  require_member(saturation_delta, kDeltaValues, "saturation_delta");
  require_member(hue_delta, kDeltaValues, "hue_delta");
  require_member(image_quality_delta, kDeltaValues, "image_quality_delta");
}

Image resize(const Image& image, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ValueError("resize target must be positive");
  if (height == image.height && width == image.width) return image;
  Image out(height, width, image.channels);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double max_y = static_cast<double>(image.height - 1), max_x = static_cast<double>(image.width - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels; ++c) {
        const double top = image.at(y0, x0, c) * (1 - wx) + image.at(y0, x1, c) * wx;
        const double bottom = image.at(y1, x0, c) * (1 - wx) + image.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return out;
}

Image adapt_channels(const Image& image, std::size_t channels) {
  if (channels == image.channels) return image;
  Image out(image.height, image.width, channels);
  const std::size_t n = image.height * image.width;
  if (image.channels == 1) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < channels; ++c) out.pixels[i * channels + c] = image.pixels[i];
  } else if (channels == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t c = 0; c < image.channels; ++c) acc += image.pixels[i * image.channels + c];
      out.pixels[i] = acc / static_cast<double>(image.channels);
    }
  } else {
    throw ValueError("unsupported channel conversion " + std::to_string(image.channels) + " -> " +
                     std::to_string(channels));
  }
  return out;
}

Image fit_to(const Image& image, std::size_t resolution, std::size_t channels) {
  return adapt_channels(resize(image, resolution), channels);
}

Image preprocess(const Image& image, const PreprocessConfig& config, Rng& rng, bool train_mode) {
  if (!train_mode) return image;
  Image img = image;
  if (config.cropped_area_range_min < 1.0 || config.cropped_aspect_ratio_range_min < 1.0) {
    const CropBox box = sample_crop(image.height, image.width, config.cropped_area_range_min,
                                    config.cropped_aspect_ratio_range_min, rng);
    img = resize(crop(image, box.top, box.left, box.height, box.width), image.height, image.width);
  }
  if (config.flip_left_right && rng.bernoulli(0.5)) flip_horizontal(img);
  if (config.brightness_delta > 0.0) {
    const double shift = rng.uniform(-config.brightness_delta, config.brightness_delta);
    for (double& p : img.pixels) p += shift;
  }
  if (config.contrast_delta > 0.0) adjust_contrast(img, 1.0 + rng.uniform(-config.contrast_delta, config.contrast_delta));
  if (img.channels == 3) {
    if (config.saturation_delta > 0.0)
      adjust_saturation(img, 1.0 + rng.uniform(-config.saturation_delta, config.saturation_delta));
    if (config.hue_delta > 0.0) adjust_hue(img, rng.uniform(-config.hue_delta, config.hue_delta));
  }
  if (config.image_quality_delta > 0.0) {
    // Quantization to a random step in (0, delta]; error is uniform in +-step/2.
    const double step = rng.uniform(0.0, config.image_quality_delta);
    if (step > 0.0)
      for (double& p : img.pixels) p = std::round(p / step) * step;
  }
  for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
  return img;
}

std::vector<std::string> preprocess_notes(const PreprocessConfig& config, std::size_t channels) {
  std::vector<std::string> notes;
  if (channels == 1 && config.saturation_delta > 0.0)
    notes.emplace_back("saturation_delta has no effect on single-channel images");
  if (channels == 1 && config.hue_delta > 0.0) notes.emplace_back("hue_delta has no effect on single-channel images");
  if (channels == 3 && config.hue_delta > 0.0) notes.emplace_back("hue_delta is applied as a YIQ hue rotation");
  if (config.image_quality_delta > 0.0)
    notes.emplace_back("image_quality_delta is applied as uniform quantization noise");
  return notes;
}

}  // namespace mpath::data

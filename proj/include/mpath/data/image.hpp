#ifndef MPATH_DATA_IMAGE_HPP_
#define MPATH_DATA_IMAGE_HPP_

#include <cstddef>
#include <vector>

namespace mpath::data {

/// Height x width x channels image, interleaved (HWC), values nominally in [0, 1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  double at(std::size_t y, std::size_t x, std::size_t ch) const { return pixels[(y * width + x) * channels + ch]; }
  double& at(std::size_t y, std::size_t x, std::size_t ch) { return pixels[(y * width + x) * channels + ch]; }

  friend bool operator==(const Image&, const Image&) = default;
};

}  // namespace mpath::data

#endif  // MPATH_DATA_IMAGE_HPP_

#ifndef MPATH_DATA_IDX_HPP_
#define MPATH_DATA_IDX_HPP_

// IDX files as used by MNIST-style datasets. All integers are big-endian.
//
// images: 0x00000803 | count | rows | cols | count*rows*cols unsigned bytes
// labels: 0x00000801 | count | count unsigned bytes

#include <cstdint>
#include <string>
#include <vector>

#include "mpath/data/image.hpp"

namespace mpath::data {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxSamples {
  std::size_t rows = 0;
  std::size_t cols = 0;
  /// Single-channel images with pixels scaled to [0, 1] (byte / 255).
  std::vector<Image> images;
  std::vector<int> labels;
};

/// Reads a matching pair of IDX files. Throws FormatError on a bad magic
/// number, truncated payload or image/label count mismatch, IoError when a
/// file cannot be opened.
IdxSamples load_idx(const std::string& images_path, const std::string& labels_path);

/// Writes raw bytes in IDX layout. `pixels` holds count*rows*cols bytes.
void write_idx_images(const std::string& path, std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels);

}  // namespace mpath::data

#endif  // MPATH_DATA_IDX_HPP_

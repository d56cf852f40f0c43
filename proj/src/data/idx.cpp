#include "mpath/data/idx.hpp"

#include <fstream>
#include <iterator>

#include "mpath/errors.hpp"

namespace mpath::data {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open IDX file " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) throw FormatError("truncated IDX header in " + path);
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                     static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

IdxSamples load_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  if (read_be32(img, 0, images_path) != kIdxImagesMagic)
    throw FormatError("bad magic number in IDX images file " + images_path);
  if (read_be32(lab, 0, labels_path) != kIdxLabelsMagic)
    throw FormatError("bad magic number in IDX labels file " + labels_path);

  const std::size_t count = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t label_count = read_be32(lab, 4, labels_path);
  if (count != label_count)
    throw FormatError("IDX count mismatch: " + std::to_string(count) + " images vs " + std::to_string(label_count) +
                      " labels");
  if (img.size() < 16 + count * rows * cols) throw FormatError("truncated IDX image payload in " + images_path);
  if (lab.size() < 8 + count) throw FormatError("truncated IDX label payload in " + labels_path);

  IdxSamples out;
  out.rows = rows;
  out.cols = cols;
  out.images.reserve(count);
  out.labels.reserve(count);
  const std::uint8_t* px = img.data() + 16;
  for (std::size_t i = 0; i < count; ++i) {
    Image im(rows, cols, 1);
    for (std::size_t k = 0; k < rows * cols; ++k) im.pixels[k] = static_cast<double>(px[k]) / 255.0;
    px += rows * cols;
    out.images.push_back(std::move(im));
    out.labels.push_back(lab[8 + i]);
  }
  return out;
}

void write_idx_images(const std::string& path, std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != std::size_t{count} * rows * cols) throw ValueError("pixel buffer does not match IDX dims");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  put_be32(out, kIdxImagesMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  put_be32(out, kIdxLabelsMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

}  // namespace mpath::data

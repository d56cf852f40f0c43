#include "mpath/data/task.hpp"

#include <algorithm>
#include <cmath>

#include "mpath/data/idx.hpp"
#include "mpath/errors.hpp"
#include "mpath/rng.hpp"

namespace mpath::data {

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "val") return Split::validation;
  if (name == "test") return Split::test;
  throw ValueError("unknown split '" + std::string(name) + "'");
}

void TaskSpec::validate() const {
  if (task_id.empty()) throw ValueError("task id must be non-empty");
  const std::string where = "task '" + task_id + "': ";
  if (num_classes < 2) throw ValueError(where + "num_classes must be >= 2");
  if (resolution < 1) throw ValueError(where + "resolution must be positive");
  if (channels != 1 && channels != 3) throw ValueError(where + "channels must be 1 or 3");
  for (std::size_t n : {splits.train, splits.validation, splits.test})
    if (n < num_classes) throw ValueError(where + "every split needs at least one sample per class");
  if (const auto* fam = std::get_if<SyntheticFamily>(&source)) {
    if (fam->class_shapes.size() != num_classes) throw ValueError(where + "class_shapes must have num_classes entries");
    for (int s : fam->class_shapes)
      if (s < 0 || s >= SyntheticFamily::kNumShapes) throw ValueError(where + "shape id out of range");
    if (fam->textures.empty()) throw ValueError(where + "texture vocabulary is empty");
    for (int t : fam->textures)
      if (t < 0 || t >= SyntheticFamily::kNumTextures) throw ValueError(where + "texture id out of range");
    if (!(fam->hue_min >= 0.0 && fam->hue_min <= fam->hue_max && fam->hue_max <= 1.0))
      throw ValueError(where + "hue range must satisfy 0 <= min <= max <= 1");
    if (!(fam->noise >= 0.0)) throw ValueError(where + "noise must be non-negative");
    if (!(fam->size_min > 0.0 && fam->size_min <= fam->size_max && fam->size_max <= 1.0))
      throw ValueError(where + "size range must satisfy 0 < min <= max <= 1");
  } else {
    const auto& idx = std::get<IdxSource>(source);
    if (channels != 1) throw ValueError(where + "IDX tasks are single-channel");
    if (idx.images_path.empty() || idx.labels_path.empty()) throw ValueError(where + "IDX paths must be set");
  }
}

const SplitData& Dataset::split(Split s) const {
  switch (s) {
    case Split::train:
      return train;
    case Split::validation:
      return validation;
    case Split::test:
      return test;
  }
  throw ValueError("bad split");
}

std::vector<std::size_t> class_histogram(const SplitData& split, std::size_t num_classes) {
  std::vector<std::size_t> hist(num_classes, 0);
  for (int label : split.labels) ++hist.at(static_cast<std::size_t>(label));
  return hist;
}

namespace {

bool inside_shape(int shape, double u, double v) {
  const double au = std::abs(u), av = std::abs(v);
  switch (shape) {
    case 0:  // disk
      return u * u + v * v <= 1.0;
    case 1:  // square
      return au <= 0.8 && av <= 0.8;
    case 2:  // triangle, apex up
      return v >= -0.9 && v <= 0.9 && au <= 0.5 * (v + 0.9);
    case 3:  // plus
      return (au <= 0.3 && av <= 1.0) || (av <= 0.3 && au <= 1.0);
    case 4: {  // ring
      const double r2 = u * u + v * v;
      return r2 <= 1.0 && r2 >= 0.3;
    }
    case 5:  // horizontal bar
      return av <= 0.3 && au <= 1.0;
    case 6:  // vertical bar
      return au <= 0.3 && av <= 1.0;
    case 7:  // diamond
      return au + av <= 1.0;
    default:
      return false;
  }
}

double texture_value(int texture, double x, double y, double period, double phase) {
  auto band = [period](double t) { return static_cast<long>(std::floor(t / period)) & 1L; };
  switch (texture) {
    case 0:
      return 1.0;
    case 1:
      return band(y + phase) ? 1.0 : 0.3;
    case 2:
      return band(x + phase) ? 1.0 : 0.3;
    case 3:
      return (band(x + phase) ^ band(y + phase)) ? 1.0 : 0.3;
    case 4:
      return band(x + y + phase) ? 1.0 : 0.3;
    case 5:
      return (band(x + phase) && band(y + phase)) ? 1.0 : 0.3;
    default:
      return 1.0;
  }
}

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  const double hh = (h - std::floor(h)) * 6.0;
  const int sector = static_cast<int>(hh) % 6;
  const double f = hh - std::floor(hh);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  const double table[6][3] = {{v, t, p}, {q, v, p}, {p, v, t}, {p, q, v}, {t, p, v}, {v, p, q}};
  for (int c = 0; c < 3; ++c) rgb[c] = table[sector][c];
}

SplitData render_split(const TaskSpec& spec, const SyntheticFamily& fam, Split split, std::size_t count) {
  const std::uint64_t split_seed = derive_seed(fam.seed, static_cast<std::uint64_t>(split) + 1);
  std::vector<int> labels(count);
  for (std::size_t i = 0; i < count; ++i) labels[i] = static_cast<int>(i % spec.num_classes);
  Rng order(derive_seed(split_seed, 0xA5A5));
  order.shuffle(labels);

  SplitData out;
  out.labels = labels;
  out.images.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.images.push_back(
        render_synthetic_sample(fam, spec.resolution, spec.channels, labels[i], derive_seed(split_seed, i + 1)));
  return out;
}

Dataset build_idx_dataset(const TaskSpec& spec, const IdxSource& src) {
  IdxSamples samples = load_idx(src.images_path, src.labels_path);
  const std::string where = "task '" + spec.task_id + "': ";
  if (samples.rows != spec.resolution || samples.cols != spec.resolution)
    throw ValueError(where + "IDX images are " + std::to_string(samples.rows) + "x" + std::to_string(samples.cols) +
                     ", expected square resolution " + std::to_string(spec.resolution));
  const std::size_t needed = spec.splits.train + spec.splits.validation + spec.splits.test;
  if (needed > samples.labels.size())
    throw ValueError(where + "splits need " + std::to_string(needed) + " samples, IDX files hold " +
                     std::to_string(samples.labels.size()));
  for (int label : samples.labels)
    if (label < 0 || static_cast<std::size_t>(label) >= spec.num_classes)
      throw ValueError(where + "IDX label " + std::to_string(label) + " outside num_classes");

  std::vector<std::size_t> order(samples.labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(src.seed, 0x1D));
  rng.shuffle(order);

  Dataset ds;
  ds.spec = spec;
  std::size_t cursor = 0;
  for (auto [target, n] : {std::pair{&ds.train, spec.splits.train}, std::pair{&ds.validation, spec.splits.validation},
                           std::pair{&ds.test, spec.splits.test}}) {
    for (std::size_t k = 0; k < n; ++k, ++cursor) {
      target->images.push_back(samples.images[order[cursor]]);
      target->labels.push_back(samples.labels[order[cursor]]);
    }
    const auto hist = class_histogram(*target, spec.num_classes);
    if (std::find(hist.begin(), hist.end(), 0) != hist.end())
      throw ValueError(where + "a class is missing from one of the IDX splits");
  }
  return ds;
}

}  // namespace

Image render_synthetic_sample(const SyntheticFamily& fam, std::size_t resolution, std::size_t channels, int label,
                              std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  const double R = static_cast<double>(resolution);
  const int shape = fam.class_shapes.at(static_cast<std::size_t>(label));
  const int texture = fam.textures[rng.index(fam.textures.size())];
  const double size = rng.uniform(fam.size_min, fam.size_max) * R;
  const double half = 0.5 * size;
  const double cx = rng.uniform(half, R - half);
  const double cy = rng.uniform(half, R - half);
  const double period = rng.uniform(1.5, 3.0);
  const double phase = rng.uniform(0.0, 2.0 * period);

  double fg[3];
  hsv_to_rgb(rng.uniform(fam.hue_min, fam.hue_max), rng.uniform(0.6, 1.0), rng.uniform(0.75, 1.0), fg);
  double bg[3];
  const double bg_level = rng.uniform(0.0, 0.3);
  for (double& c : bg) c = bg_level + rng.uniform(-0.05, 0.05);
  const double gx = rng.uniform(-0.1, 0.1), gy = rng.uniform(-0.1, 0.1);

  Image img(resolution, resolution, channels);
  for (std::size_t y = 0; y < resolution; ++y) {
    for (std::size_t x = 0; x < resolution; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      const double u = (px - cx) / half, v = (py - cy) / half;
      const bool in = inside_shape(shape, u, v);
      const double t = in ? texture_value(texture, px, py, period, phase) : 0.0;
      const double ramp = gx * (px / R - 0.5) + gy * (py / R - 0.5);
      for (std::size_t c = 0; c < channels; ++c) {
        const double fg_c = channels == 1 ? (fg[0] + fg[1] + fg[2]) / 3.0 + 0.2 : fg[c];
        double value = in ? fg_c * (0.45 + 0.55 * t) : bg[c] + ramp;
        value += fam.noise * rng.normal();
        img.at(y, x, c) = std::clamp(value, 0.0, 1.0);
      }
    }
  }
  return img;
}

Dataset generate_synthetic_task(const TaskSpec& spec) {
  spec.validate();
  const auto& fam = std::get<SyntheticFamily>(spec.source);
  Dataset ds;
  ds.spec = spec;
  ds.train = render_split(spec, fam, Split::train, spec.splits.train);
  ds.validation = render_split(spec, fam, Split::validation, spec.splits.validation);
  ds.test = render_split(spec, fam, Split::test, spec.splits.test);
  return ds;
}

Dataset build_dataset(const TaskSpec& spec) {
  spec.validate();
  if (std::holds_alternative<SyntheticFamily>(spec.source)) return generate_synthetic_task(spec);
  return build_idx_dataset(spec, std::get<IdxSource>(spec.source));
}

}  // namespace mpath::data

#include "mpath/store/cache.hpp"

#include "mpath/errors.hpp"
#include "mpath/store/forward.hpp"

namespace mpath::store {

std::shared_ptr<const data::Dataset> DatasetRegistry::get(const data::TaskSpec& spec) {
  std::lock_guard lock(mutex_);
  auto it = datasets_.find(spec.task_id);
  if (it != datasets_.end()) return it->second;
  auto ds = std::make_shared<const data::Dataset>(data::build_dataset(spec));
  datasets_.emplace(spec.task_id, ds);
  return ds;
}

RepresentationCache::Block& RepresentationCache::block(const std::string& path_id, const std::string& task_id,
                                                       data::Split split) {
  const Key key{path_id, task_id, split};
  {
    std::shared_lock lock(mutex_);
    auto it = blocks_.find(key);
    if (it != blocks_.end()) return *it->second;
  }
  const PathSpec& path = store_.path(path_id);
  auto b = std::make_unique<Block>();
  b->width = store_.task(path.task_id).num_classes;
  const std::size_t n = datasets_.get(store_.task(task_id))->split(split).size();
  b->rows.assign(n * b->width, 0.0);
  b->present.assign(n, 0);
  std::unique_lock lock(mutex_);
  auto [it, inserted] = blocks_.try_emplace(key, std::move(b));
  return *it->second;
}

ad::Tensor RepresentationCache::get_or_compute(const std::string& path_id, const std::string& task_id,
                                               data::Split split, std::size_t index) {
  const std::size_t idx[1] = {index};
  ad::Tensor rows = get_rows(path_id, task_id, split, idx);
  return rows.reshaped({rows.cols()});
}

ad::Tensor RepresentationCache::get_rows(const std::string& path_id, const std::string& task_id, data::Split split,
                                         std::span<const std::size_t> indices) {
  if (indices.empty()) throw ValueError("get_rows: no indices");
  Block& b = block(path_id, task_id, split);
  const std::size_t c = b.width;
  const std::size_t n = b.present.size();
  for (std::size_t i : indices)
    if (i >= n)
      throw ValueError("sample index " + std::to_string(i) + " out of range for " + task_id + "/" +
                       std::string(data::split_name(split)));

  std::vector<double> out(indices.size() * c);
  std::vector<std::size_t> missing;
  {
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (!b.present[indices[i]]) {
        missing.push_back(i);
        continue;
      }
      std::copy_n(b.rows.begin() + static_cast<std::ptrdiff_t>(indices[i] * c), c,
                  out.begin() + static_cast<std::ptrdiff_t>(i * c));
    }
  }
  hits_ += indices.size() - missing.size();
  misses_ += missing.size();

  if (!missing.empty()) {
    const auto ds = datasets_.get(store_.task(task_id));
    const data::SplitData& samples = ds->split(split);
    const PathSpec& path = store_.path(path_id);
    std::vector<const data::Image*> images;
    images.reserve(missing.size());
    for (std::size_t i : missing) images.push_back(&samples.images[indices[i]]);
    const ad::Tensor logits =
        path_forward(store_, path_id, images_to_batch(images, path.input_resolution, path.channels));
    std::unique_lock lock(mutex_);
    for (std::size_t m = 0; m < missing.size(); ++m) {
      const std::size_t i = missing[m];
      auto row = logits.data().subspan(m * c, c);
      std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(i * c));
      std::copy(row.begin(), row.end(), b.rows.begin() + static_cast<std::ptrdiff_t>(indices[i] * c));
      if (!b.present[indices[i]]) {
        b.present[indices[i]] = 1;
        ++b.count;
      }
    }
  }
  return ad::Tensor({indices.size(), c}, std::move(out));
}

std::size_t RepresentationCache::size() const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  for (const auto& [_, b] : blocks_) n += b->count;
  return n;
}

void RepresentationCache::reset_counters() noexcept {
  hits_ = 0;
  misses_ = 0;
}

}  // namespace mpath::store

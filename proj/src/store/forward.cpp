#include "mpath/store/forward.hpp"

#include <algorithm>

#include "mpath/data/preprocess.hpp"
#include "mpath/errors.hpp"

namespace mpath::store {

ad::Tensor images_to_batch(std::span<const data::Image* const> images, std::size_t resolution,
                           std::size_t channels) {
  if (images.empty()) throw ValueError("empty image batch");
  const std::size_t d = resolution * resolution * channels;
  std::vector<double> out;
  out.reserve(images.size() * d);
  for (const data::Image* img : images) {
    const data::Image fitted = data::fit_to(*img, resolution, channels);
    out.insert(out.end(), fitted.pixels.begin(), fitted.pixels.end());
  }
  return ad::Tensor({images.size(), d}, std::move(out));
}

ad::Tensor module_forward(const ModuleDef& module, const ad::Tensor& x) {
  const std::size_t b = x.rows();
  const std::size_t in = module.in_dim();
  const std::size_t out = module.out_dim();
  if (x.cols() != in)
    throw DimensionError("module " + module.module_id + " expects width " + std::to_string(in) + ", got " +
                         std::to_string(x.cols()));
  const auto& w = module.kernel.data();
  const auto& bias = module.bias.data();
  const auto& xv = x.data();
  std::vector<double> y(b * out);
  for (std::size_t r = 0; r < b; ++r) {
    double* yr = y.data() + r * out;
    std::copy(bias.begin(), bias.end(), yr);
    const double* xr = xv.data() + r * in;
    for (std::size_t k = 0; k < in; ++k) {
      const double a = xr[k];
      if (a == 0.0) continue;
      const double* wk = w.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) yr[j] += a * wk[j];
    }
    if (module.has_activation())
      for (std::size_t j = 0; j < out; ++j) yr[j] = std::max(yr[j], 0.0);
  }
  return ad::Tensor({b, out}, std::move(y));
}

ad::Tensor path_forward(const SystemStore& store, const std::string& path_id, const ad::Tensor& batch) {
  const PathSpec& path = store.path(path_id);
  ad::Tensor h = batch;
  for (const auto& mid : path.module_ids) h = module_forward(*store.module_ptr(mid), h);
  return h;
}

}  // namespace mpath::store

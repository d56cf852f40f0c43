#ifndef MPATH_STORE_FORWARD_HPP_
#define MPATH_STORE_FORWARD_HPP_

#include <cstddef>
#include <span>
#include <string>

#include "mpath/autodiff/tensor.hpp"
#include "mpath/data/image.hpp"
#include "mpath/store/store.hpp"

namespace mpath::store {

/// Flattens images (HWC order) into a [b x res*res*channels] batch after
/// resizing and channel adaptation.
ad::Tensor images_to_batch(std::span<const data::Image* const> images, std::size_t resolution,
                           std::size_t channels);

/// Forward pass of a stored module without a tape.
ad::Tensor module_forward(const ModuleDef& module, const ad::Tensor& x);

/// Logits of a stored path for a batch already fitted to the path input.
ad::Tensor path_forward(const SystemStore& store, const std::string& path_id, const ad::Tensor& batch);

}  // namespace mpath::store

#endif  // MPATH_STORE_FORWARD_HPP_

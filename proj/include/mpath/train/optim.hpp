#ifndef MPATH_TRAIN_OPTIM_HPP_
#define MPATH_TRAIN_OPTIM_HPP_

#include <cstddef>
#include <map>
#include <string>

#include "mpath/autodiff/tensor.hpp"
#include "mpath/store/module.hpp"

namespace mpath::train {

/// Linear warmup from 0 to peak over ceil(warmup_ratio * total) steps, then
/// cosine decay reaching 0 at `total`. Throws ValueError when step >= total
/// or the ratio is not an admissible value.
double lr_schedule(std::size_t step, std::size_t total, double peak_lr, double warmup_ratio);

struct SgdConfig {
  double learning_rate = 0.0;
  double momentum = 0.0;
  bool nesterov = false;
};

/// In-place update of one tensor: v <- m*v + g, then p -= lr*(m*v + g)
/// with nesterov, p -= lr*v otherwise.
void sgd_step(ad::Tensor& param, const ad::Tensor& grad, ad::Tensor& velocity, const SgdConfig& config);

/// Momentum buffers keyed by "<module_id>.kernel" and "<module_id>.bias".
class Optimizer {
 public:
  /// Updates a trainable module. Throws ContractViolation for frozen modules.
  void apply(store::ModuleDef& module, const ad::Tensor& grad_kernel, const ad::Tensor& grad_bias,
             const SgdConfig& config);

  const std::map<std::string, ad::Tensor>& state() const noexcept { return velocity_; }

 private:
  std::map<std::string, ad::Tensor> velocity_;
};

}  // namespace mpath::train

#endif  // MPATH_TRAIN_OPTIM_HPP_

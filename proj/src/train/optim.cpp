#include "mpath/train/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpath/errors.hpp"
#include "mpath/train/hyperparams.hpp"

namespace mpath::train {

double lr_schedule(std::size_t step, std::size_t total, double peak_lr, double warmup_ratio) {
  if (std::find(kWarmupRatioValues.begin(), kWarmupRatioValues.end(), warmup_ratio) == kWarmupRatioValues.end())
    throw ValueError("warmup ratio " + std::to_string(warmup_ratio) + " is not an admissible value");
  if (step >= total) throw ValueError("lr_schedule: step " + std::to_string(step) + " >= total " + std::to_string(total));
  const auto warmup = static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total) - 1e-9));
  if (step < warmup) return peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void sgd_step(ad::Tensor& param, const ad::Tensor& grad, ad::Tensor& velocity, const SgdConfig& config) {
  if (param.shape() != grad.shape() || param.shape() != velocity.shape())
    throw DimensionError("sgd_step: parameter, gradient and velocity shapes differ");
  auto p = param.data();
  auto v = velocity.data();
  const auto g = grad.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = config.momentum * v[i] + g[i];
    const double update = config.nesterov ? config.momentum * v[i] + g[i] : v[i];
    p[i] -= config.learning_rate * update;
  }
}

void Optimizer::apply(store::ModuleDef& module, const ad::Tensor& grad_kernel, const ad::Tensor& grad_bias,
                      const SgdConfig& config) {
  if (module.frozen) throw ContractViolation("attempt to update frozen module '" + module.module_id + "'");
  auto slot = [&](const std::string& name, const ad::Tensor& like) -> ad::Tensor& {
    auto it = velocity_.find(name);
    if (it == velocity_.end()) it = velocity_.emplace(name, ad::Tensor::zeros_like(like)).first;
    return it->second;
  };
  sgd_step(module.kernel, grad_kernel, slot(module.module_id + ".kernel", module.kernel), config);
  sgd_step(module.bias, grad_bias, slot(module.module_id + ".bias", module.bias), config);
}

}  // namespace mpath::train

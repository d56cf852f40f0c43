#ifndef MPATH_ARCH_ROUTER_HPP_
#define MPATH_ARCH_ROUTER_HPP_

#include <span>

#include "mpath/arch/aggregation.hpp"
#include "mpath/autodiff/ops.hpp"
#include "mpath/store/module.hpp"

namespace mpath::arch {

/// Router bias giving softmax weights (w*, (1-w*)/(n-1), ...) with the main
/// path first. Throws ValueError unless 0 < w* < 1 and n >= 2.
ad::Tensor init_router_bias(double w_main_star, std::size_t num_paths);

/// Forward value is o; the gradient reaching o is multiplied by lambda.
ad::Var scale_router_gradient(const ad::Var& o, double lambda);

/// Per-sample softmax weights [b x |P|] conditioned on the main logits, with
/// the router gradient scaled by lambda.
ad::Var route(const store::ModuleDef& router, const store::ModuleVars& vars, const ad::Var& main_logits,
              double lambda);

/// Combines path representations [b x c] with weights [b x |P|].
/// `ema` holds the moving averages of the weights and is only read in
/// ema_decoupled mode. `weights` is ignored in sum mode. Throws
/// ContractViolation when weight rows do not sum to 1 within 1e-6.
ad::Var aggregate(std::span<const ad::Var> reps, const ad::Var& weights, AggregationMode mode,
                  std::span<const double> ema = {});

}  // namespace mpath::arch

#endif  // MPATH_ARCH_ROUTER_HPP_

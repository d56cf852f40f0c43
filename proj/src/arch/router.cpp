#include "mpath/arch/router.hpp"

#include <cmath>
#include <vector>

#include "mpath/errors.hpp"

namespace mpath::arch {

ad::Tensor init_router_bias(double w_main_star, std::size_t num_paths) {
  if (!(w_main_star > 0.0 && w_main_star < 1.0)) throw ValueError("w_main_star must lie in (0, 1)");
  if (num_paths < 2) throw ValueError("a multipath model needs at least 2 paths");
  ad::Tensor b({num_paths}, 0.0);
  b[0] = std::log(static_cast<double>(num_paths - 1) / (1.0 / w_main_star - 1.0));
  return b;
}

ad::Var scale_router_gradient(const ad::Var& o, double lambda) {
  // sg(o) + lambda * (o - sg(o)) equals lambda*o + (1-lambda)*sg(o), but the
  // forward value is exactly o.
  const ad::Var frozen = ad::stop_gradient(o);
  return ad::add(frozen, ad::scale(ad::sub(o, frozen), lambda));
}

ad::Var route(const store::ModuleDef& router, const store::ModuleVars& vars, const ad::Var& main_logits,
              double lambda) {
  const ad::Var logits = store::apply_module(router, vars, main_logits);
  return scale_router_gradient(ad::softmax(logits, 1), lambda);
}

namespace {

void check_weights(std::span<const ad::Var> reps, const ad::Var& weights) {
  const ad::Tensor& w = weights.value();
  if (w.rank() != 2 || w.dim(1) != reps.size() || w.dim(0) != reps.front().value().dim(0))
    throw DimensionError("aggregate: weights " + ad::shape_string(w.shape()) + " do not match " +
                         std::to_string(reps.size()) + " representations");
  for (std::size_t r = 0; r < w.dim(0); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < w.dim(1); ++c) s += w.at(r, c);
    if (std::abs(s - 1.0) > 1e-6)
      throw ContractViolation("aggregate: weight row " + std::to_string(r) + " sums to " + std::to_string(s));
  }
}

}  // namespace

ad::Var aggregate(std::span<const ad::Var> reps, const ad::Var& weights, AggregationMode mode,
                  std::span<const double> ema) {
  if (reps.empty()) throw ValueError("aggregate: no representations");
  for (const auto& r : reps)
    if (r.value().shape() != reps.front().value().shape())
      throw DimensionError("aggregate: representation shapes differ");
  if (mode == AggregationMode::sum) return ad::add_n(reps);
  check_weights(reps, weights);
  if (mode == AggregationMode::standard) return ad::weighted_sum(reps, weights);

  // sg(R).w carries the forward value and the router gradient. The second
  // term is exactly zero in the forward pass and delivers the backward
  // weights (1 or w/EMA(w)) to the representations.
  std::vector<ad::Var> sg_reps;
  sg_reps.reserve(reps.size());
  for (const auto& r : reps) sg_reps.push_back(ad::stop_gradient(r));
  const ad::Var forward = ad::weighted_sum(sg_reps, weights);
  ad::Var backward;
  if (mode == AggregationMode::decoupled) {
    backward = ad::add_n(reps);
  } else {
    if (ema.size() != reps.size()) throw DimensionError("aggregate: EMA state does not match path count");
    ad::Tensor s = weights.value();
    for (std::size_t r = 0; r < s.dim(0); ++r)
      for (std::size_t c = 0; c < s.dim(1); ++c) s.at(r, c) /= ema[c];
    backward = ad::weighted_sum(reps, weights.tape().constant(std::move(s)));
  }
  return ad::add(forward, ad::sub(backward, ad::stop_gradient(backward)));
}

}  // namespace mpath::arch

#ifndef MPATH_AUTODIFF_OPS_HPP_
#define MPATH_AUTODIFF_OPS_HPP_

#include <cstddef>
#include <span>

#include "mpath/autodiff/tape.hpp"

namespace mpath::ad {

// Differentiable ops. Broadcasting is limited to add_bias and scale; every
// other binary op requires identical shapes.

/// [m x k] . [k x n] -> [m x n]
Var matmul(const Var& a, const Var& b);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Elementwise product.
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);

/// Adds a length-n bias to each row of an [m x n] tensor.
Var add_bias(const Var& x, const Var& bias);

Var relu(const Var& x);
/// Exact (erf-based) GELU.
Var gelu(const Var& x);

/// Softmax along `axis` of a rank-1 or rank-2 tensor, max-subtracted.
Var softmax(const Var& x, std::size_t axis);

/// Identity in the forward pass; no gradient flows back to x.
Var stop_gradient(const Var& x);

/// Mean over all elements, shape [1].
Var mean(const Var& x);
/// Sum over all elements, shape [1].
Var sum(const Var& x);

Var reshape(const Var& x, Shape shape);

/// Concatenates rank-2 tensors along axis 0 (rows) or 1 (columns).
Var concat(std::span<const Var> parts, std::size_t axis);

/// Per-sample convex combination: out[b,:] = sum_i weights[b,i] * parts[i][b,:].
/// All parts are [B x C]; weights is [B x M] with M == parts.size().
Var weighted_sum(std::span<const Var> parts, const Var& weights);

/// Unweighted sum of equally shaped tensors.
Var add_n(std::span<const Var> parts);

/// Mean over the batch of -log softmax(logits)[label].
Var cross_entropy(const Var& logits, std::span<const int> labels);

/// Plain forward helpers (no tape) shared by eval paths and tests.
Tensor softmax_rows(const Tensor& logits);

}  // namespace mpath::ad

#endif  // MPATH_AUTODIFF_OPS_HPP_

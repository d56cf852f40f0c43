#include "mpath/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mpath/errors.hpp"

namespace mpath::ad {

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw ValueError("operands recorded on different tapes");
  return a.tape();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + ": expected rank-2 tensor, got " + shape_string(t.shape()));
}

// C[m,n] (+)= A[m,k] * B[k,n] with optional transposes of the stored operands.
void gemm(bool trans_a, bool trans_b, const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = c.dim(0), n = c.dim(1);
  const std::size_t k = trans_a ? a.dim(0) : a.dim(1);
  const std::size_t lda = a.dim(1), ldb = b.dim(1);
  auto A = a.data();
  auto B = b.data();
  auto C = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = C.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = trans_a ? A[p * lda + i] : A[i * lda + p];
      if (av == 0.0) continue;
      if (!trans_b) {
        const double* brow = B.data() + p * ldb;
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] += av * B[j * ldb + p];
      }
    }
  }
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor out = Tensor::zeros_like(x);
  auto src = x.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  if (av.dim(1) != bv.dim(0))
    throw DimensionError("matmul: inner dimensions differ " + shape_string(av.shape()) + " . " +
                         shape_string(bv.shape()));
  Tensor out({av.dim(0), bv.dim(1)}, 0.0);
  gemm(false, false, av, bv, out);
  const NodeId ia = a.id(), ib = b.id();
  return tape.record("matmul", {ia, ib}, std::move(out), [ia, ib, av, bv](const Tensor& g, GradSink& sink) {
    if (sink.wants(ia)) {
      Tensor ga(av.shape(), 0.0);
      gemm(false, true, g, bv, ga);
      sink.accumulate(ia, ga);
    }
    if (sink.wants(ib)) {
      Tensor gb(bv.shape(), 0.0);
      gemm(true, false, av, g, gb);
      sink.accumulate(ib, gb);
    }
  });
}

Var add(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  auto dst = out.data();
  auto src = b.value().data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  const NodeId ia = a.id(), ib = b.id();
  return tape.record("add", {ia, ib}, std::move(out), [ia, ib](const Tensor& g, GradSink& sink) {
    sink.accumulate(ia, g);
    sink.accumulate(ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto dst = out.data();
  auto src = b.value().data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  const NodeId ia = a.id(), ib = b.id();
  return tape.record("sub", {ia, ib}, std::move(out), [ia, ib](const Tensor& g, GradSink& sink) {
    sink.accumulate(ia, g);
    if (sink.wants(ib)) sink.accumulate(ib, map(g, [](double v) { return -v; }));
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_same_shape(av, bv, "mul");
  Tensor out = av;
  auto dst = out.data();
  auto src = bv.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
  const NodeId ia = a.id(), ib = b.id();
  return tape.record("mul", {ia, ib}, std::move(out), [ia, ib, av, bv](const Tensor& g, GradSink& sink) {
    if (sink.wants(ia)) {
      Tensor ga = g;
      auto d = ga.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= bv[i];
      sink.accumulate(ia, ga);
    }
    if (sink.wants(ib)) {
      Tensor gb = g;
      auto d = gb.data();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= av[i];
      sink.accumulate(ib, gb);
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = map(x.value(), [factor](double v) { return v * factor; });
  const NodeId ix = x.id();
  return x.tape().record("scale", {ix}, std::move(out), [ix, factor](const Tensor& g, GradSink& sink) {
    sink.accumulate(ix, map(g, [factor](double v) { return v * factor; }));
  });
}

Var add_bias(const Var& x, const Var& bias) {
  Tape& tape = same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require_rank2(xv, "add_bias");
  if (bv.rank() != 1 || bv.dim(0) != xv.dim(1))
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not match " + shape_string(xv.shape()));
  const std::size_t m = xv.dim(0), n = xv.dim(1);
  Tensor out = xv;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) += bv[j];
  const NodeId ix = x.id(), ib = bias.id();
  return tape.record("add_bias", {ix, ib}, std::move(out), [ix, ib, m, n](const Tensor& g, GradSink& sink) {
    sink.accumulate(ix, g);
    if (sink.wants(ib)) {
      Tensor gb({n}, 0.0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      sink.accumulate(ib, gb);
    }
  });
}

Var relu(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out = map(xv, [](double v) { return v > 0.0 ? v : 0.0; });
  const NodeId ix = x.id();
  return x.tape().record("relu", {ix}, std::move(out), [ix, xv](const Tensor& g, GradSink& sink) {
    Tensor gx = g;
    auto d = gx.data();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!(xv[i] > 0.0)) d[i] = 0.0;
    sink.accumulate(ix, gx);
  });
}

Var gelu(const Var& x) {
  const Tensor& xv = x.value();
  constexpr double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  Tensor out = map(xv, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); });
  const NodeId ix = x.id();
  return x.tape().record("gelu", {ix}, std::move(out), [ix, xv](const Tensor& g, GradSink& sink) {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    Tensor gx = g;
    auto d = gx.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      d[i] *= cdf + v * pdf;
    }
    sink.accumulate(ix, gx);
  });
}

namespace {

// Softmax over groups laid out with `count` groups of `len` elements at `stride`.
struct SoftmaxLayout {
  std::size_t groups, len, group_step, elem_step;
};

SoftmaxLayout softmax_layout(const Tensor& x, std::size_t axis) {
  if (x.rank() == 1) {
    if (axis != 0) throw DimensionError("softmax: axis out of range for rank-1 tensor");
    return {1, x.dim(0), 0, 1};
  }
  require_rank2(x, "softmax");
  const std::size_t r = x.dim(0), c = x.dim(1);
  if (axis == 1) return {r, c, c, 1};
  if (axis == 0) return {c, r, 1, c};
  throw DimensionError("softmax: axis out of range for rank-2 tensor");
}

Tensor softmax_forward(const Tensor& x, const SoftmaxLayout& L) {
  Tensor out = Tensor::zeros_like(x);
  for (std::size_t gi = 0; gi < L.groups; ++gi) {
    const std::size_t base = gi * L.group_step;
    double mx = x[base];
    for (std::size_t k = 1; k < L.len; ++k) mx = std::max(mx, x[base + k * L.elem_step]);
    double total = 0.0;
    for (std::size_t k = 0; k < L.len; ++k) {
      const double e = std::exp(x[base + k * L.elem_step] - mx);
      out[base + k * L.elem_step] = e;
      total += e;
    }
    for (std::size_t k = 0; k < L.len; ++k) out[base + k * L.elem_step] /= total;
  }
  return out;
}

}  // namespace

Tensor softmax_rows(const Tensor& logits) {
  const std::size_t axis = logits.rank() == 1 ? 0 : 1;
  return softmax_forward(logits, softmax_layout(logits, axis));
}

Var softmax(const Var& x, std::size_t axis) {
  const SoftmaxLayout L = softmax_layout(x.value(), axis);
  Tensor y = softmax_forward(x.value(), L);
  const NodeId ix = x.id();
  Tensor saved = y;
  return x.tape().record("softmax", {ix}, std::move(y), [ix, L, saved](const Tensor& g, GradSink& sink) {
    Tensor gx = Tensor::zeros_like(g);
    for (std::size_t gi = 0; gi < L.groups; ++gi) {
      const std::size_t base = gi * L.group_step;
      double dot = 0.0;
      for (std::size_t k = 0; k < L.len; ++k) {
        const std::size_t idx = base + k * L.elem_step;
        dot += g[idx] * saved[idx];
      }
      for (std::size_t k = 0; k < L.len; ++k) {
        const std::size_t idx = base + k * L.elem_step;
        gx[idx] = saved[idx] * (g[idx] - dot);
      }
    }
    sink.accumulate(ix, gx);
  });
}

Var stop_gradient(const Var& x) {
  // No inputs are recorded, so the sweep never reaches x through this node.
  return x.tape().record("stop_gradient", {}, x.value(), nullptr);
}

Var sum(const Var& x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const NodeId ix = x.id();
  const Shape shape = x.value().shape();
  return x.tape().record("sum", {ix}, Tensor::scalar(total), [ix, shape](const Tensor& g, GradSink& sink) {
    sink.accumulate(ix, Tensor(shape, g.item()));
  });
}

Var mean(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  const NodeId ix = x.id();
  const Shape shape = x.value().shape();
  return x.tape().record("mean", {ix}, Tensor::scalar(total / n), [ix, shape, n](const Tensor& g, GradSink& sink) {
    sink.accumulate(ix, Tensor(shape, g.item() / n));
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor out = x.value().reshaped(shape);
  const NodeId ix = x.id();
  const Shape original = x.value().shape();
  return x.tape().record("reshape", {ix}, std::move(out), [ix, original](const Tensor& g, GradSink& sink) {
    sink.accumulate(ix, g.reshaped(original));
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
  Tape& tape = parts.front().tape();
  std::vector<NodeId> ids;
  std::vector<std::size_t> extents;
  const Tensor& first = parts.front().value();
  require_rank2(first, "concat");
  const std::size_t other = first.dim(1 - axis);
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (&p.tape() != &tape) throw ValueError("concat: operands on different tapes");
    require_rank2(p.value(), "concat");
    if (p.value().dim(1 - axis) != other) throw DimensionError("concat: incompatible shapes");
    ids.push_back(p.id());
    extents.push_back(p.value().dim(axis));
    total += p.value().dim(axis);
  }
  Shape out_shape = axis == 0 ? Shape{total, other} : Shape{other, total};
  Tensor out(out_shape, 0.0);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t i = 0; i < v.dim(0); ++i)
      for (std::size_t j = 0; j < v.dim(1); ++j) {
        if (axis == 0)
          out.at(offset + i, j) = v.at(i, j);
        else
          out.at(i, offset + j) = v.at(i, j);
      }
    offset += extents[k];
  }
  std::vector<NodeId> inputs = ids;
  return tape.record("concat", std::move(inputs), std::move(out),
                     [ids, extents, axis, other](const Tensor& g, GradSink& sink) {
                       std::size_t offset = 0;
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (sink.wants(ids[k])) {
                           Shape s = axis == 0 ? Shape{extents[k], other} : Shape{other, extents[k]};
                           Tensor part(s, 0.0);
                           for (std::size_t i = 0; i < s[0]; ++i)
                             for (std::size_t j = 0; j < s[1]; ++j)
                               part.at(i, j) = axis == 0 ? g.at(offset + i, j) : g.at(i, offset + j);
                           sink.accumulate(ids[k], part);
                         }
                         offset += extents[k];
                       }
                     });
}

Var weighted_sum(std::span<const Var> parts, const Var& weights) {
  if (parts.empty()) throw DimensionError("weighted_sum: no inputs");
  Tape& tape = weights.tape();
  const Tensor& w = weights.value();
  require_rank2(w, "weighted_sum");
  const Tensor& first = parts.front().value();
  require_rank2(first, "weighted_sum");
  const std::size_t b = first.dim(0), c = first.dim(1), m = parts.size();
  if (w.dim(0) != b || w.dim(1) != m)
    throw DimensionError("weighted_sum: weights " + shape_string(w.shape()) + " do not match " + std::to_string(m) +
                         " parts of " + shape_string(first.shape()));
  std::vector<NodeId> ids;
  std::vector<Tensor> saved;
  Tensor out({b, c}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const Var& p = parts[i];
    if (&p.tape() != &tape) throw ValueError("weighted_sum: operands on different tapes");
    require_same_shape(p.value(), first, "weighted_sum");
    const Tensor& r = p.value();
    for (std::size_t s = 0; s < b; ++s) {
      const double ws = w.at(s, i);
      for (std::size_t j = 0; j < c; ++j) out.at(s, j) += ws * r.at(s, j);
    }
    ids.push_back(p.id());
    saved.push_back(r);
  }
  std::vector<NodeId> inputs = ids;
  const NodeId iw = weights.id();
  inputs.push_back(iw);
  return tape.record("weighted_sum", std::move(inputs), std::move(out),
                     [ids, saved, w, iw, b, c, m](const Tensor& g, GradSink& sink) {
                       for (std::size_t i = 0; i < m; ++i) {
                         if (!sink.wants(ids[i])) continue;
                         Tensor gr({b, c}, 0.0);
                         for (std::size_t s = 0; s < b; ++s)
                           for (std::size_t j = 0; j < c; ++j) gr.at(s, j) = w.at(s, i) * g.at(s, j);
                         sink.accumulate(ids[i], gr);
                       }
                       if (sink.wants(iw)) {
                         Tensor gw({b, m}, 0.0);
                         for (std::size_t i = 0; i < m; ++i)
                           for (std::size_t s = 0; s < b; ++s) {
                             double dot = 0.0;
                             for (std::size_t j = 0; j < c; ++j) dot += g.at(s, j) * saved[i].at(s, j);
                             gw.at(s, i) = dot;
                           }
                         sink.accumulate(iw, gw);
                       }
                     });
}

Var add_n(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("add_n: no inputs");
  Tape& tape = parts.front().tape();
  Tensor out = parts.front().value();
  std::vector<NodeId> ids{parts.front().id()};
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (&parts[i].tape() != &tape) throw ValueError("add_n: operands on different tapes");
    require_same_shape(parts[i].value(), out, "add_n");
    auto dst = out.data();
    auto src = parts[i].value().data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    ids.push_back(parts[i].id());
  }
  std::vector<NodeId> inputs = ids;
  return tape.record("add_n", std::move(inputs), std::move(out), [ids](const Tensor& g, GradSink& sink) {
    for (NodeId id : ids) sink.accumulate(id, g);
  });
}

Var cross_entropy(const Var& logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  require_rank2(z, "cross_entropy");
  const std::size_t b = z.dim(0), c = z.dim(1);
  if (labels.size() != b)
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " + std::to_string(b));
  for (int label : labels)
    if (label < 0 || static_cast<std::size_t>(label) >= c)
      throw ValueError("cross_entropy: label " + std::to_string(label) + " outside [0, " + std::to_string(c) + ")");
  Tensor probs = softmax_rows(z);
  double total = 0.0;
  for (std::size_t s = 0; s < b; ++s) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (z.at(s, j) > z.at(s, arg)) arg = j;
    const double mx = z.at(s, arg);
    // The max term contributes exactly 1; log1p keeps precision for confident rows.
    double rest = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (j != arg) rest += std::exp(z.at(s, j) - mx);
    total += std::log1p(rest) - (z.at(s, static_cast<std::size_t>(labels[s])) - mx);
  }
  std::vector<int> saved_labels(labels.begin(), labels.end());
  const NodeId iz = logits.id();
  return logits.tape().record(
      "cross_entropy", {iz}, Tensor::scalar(total / static_cast<double>(b)),
      [iz, probs, saved_labels, b, c](const Tensor& g, GradSink& sink) {
        const double k = g.item() / static_cast<double>(b);
        Tensor gz = probs;
        for (std::size_t s = 0; s < b; ++s) {
          gz.at(s, static_cast<std::size_t>(saved_labels[s])) -= 1.0;
          for (std::size_t j = 0; j < c; ++j) gz.at(s, j) *= k;
        }
        sink.accumulate(iz, gz);
      });
}

}  // namespace mpath::ad

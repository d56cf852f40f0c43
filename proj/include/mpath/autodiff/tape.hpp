#ifndef MPATH_AUTODIFF_TAPE_HPP_
#define MPATH_AUTODIFF_TAPE_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "mpath/autodiff/tensor.hpp"

namespace mpath::ad {

using NodeId = std::size_t;

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const;
  NodeId id() const noexcept { return id_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Accumulates gradient contributions into input nodes during backward.
class GradSink {
 public:
  virtual ~GradSink() = default;
  virtual void accumulate(NodeId input, const Tensor& contribution) = 0;
  virtual bool wants(NodeId input) const = 0;
};

/// Receives the upstream gradient of a node and pushes contributions to its inputs.
using BackwardFn = std::function<void(const Tensor& upstream, GradSink& sink)>;

/// Gradients produced by one backward pass, indexed by node.
class Gradients {
 public:
  explicit Gradients(std::vector<std::optional<Tensor>> grads, const Tape* tape)
      : grads_(std::move(grads)), tape_(tape) {}

  /// Gradient of the root with respect to v; zeros when v is unreachable.
  Tensor of(const Var& v) const;
  bool reached(const Var& v) const;

 private:
  std::vector<std::optional<Tensor>> grads_;
  const Tape* tape_;
};

/// Append-only define-by-run record of tensor operations.
class Tape {
 public:
  struct Node {
    std::string_view op;
    std::vector<NodeId> inputs;
    Tensor value;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records a value that never receives gradient (inputs, frozen weights).
  Var constant(Tensor value);
  /// Records a trainable leaf.
  Var parameter(Tensor value);

  /// Records an op result; inputs must already exist on this tape.
  Var record(std::string_view op, std::vector<NodeId> inputs, Tensor value, BackwardFn backward);

  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Reverse sweep from a scalar root. Each node is visited at most once.
  Gradients backward(const Var& root) const;

 private:
  // A deque keeps references to recorded values valid while the tape grows.
  std::deque<Node> nodes_;
};

}  // namespace mpath::ad

#endif  // MPATH_AUTODIFF_TAPE_HPP_

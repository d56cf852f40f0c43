#include "mpath/autodiff/tape.hpp"

#include "mpath/errors.hpp"

namespace mpath::ad {

Tape& Var::tape() const {
  if (!tape_) throw ValueError("use of an unbound Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().node(id_).value; }

bool Var::requires_grad() const { return tape().node(id_).requires_grad; }

Tensor Gradients::of(const Var& v) const {
  if (&v.tape() != tape_) throw ValueError("Var belongs to a different tape");
  if (v.id() < grads_.size() && grads_[v.id()]) return *grads_[v.id()];
  return Tensor::zeros_like(v.value());
}

bool Gradients::reached(const Var& v) const { return v.id() < grads_.size() && grads_[v.id()].has_value(); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{"constant", {}, std::move(value), false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Tensor value) {
  nodes_.push_back(Node{"parameter", {}, std::move(value), true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, std::vector<NodeId> inputs, Tensor value, BackwardFn backward) {
  bool requires_grad = false;
  for (NodeId in : inputs) {
    if (in >= nodes_.size()) throw ValueError("op input refers to a node not on this tape");
    requires_grad = requires_grad || nodes_[in].requires_grad;
  }
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{op, std::move(inputs), std::move(value), requires_grad, std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

namespace {

class VectorSink final : public GradSink {
 public:
  VectorSink(const std::deque<Tape::Node>& nodes, std::vector<std::optional<Tensor>>& grads)
      : nodes_(nodes), grads_(grads) {}

  bool wants(NodeId input) const override { return nodes_[input].requires_grad; }

  void accumulate(NodeId input, const Tensor& contribution) override {
    if (!nodes_[input].requires_grad) return;
    auto& slot = grads_[input];
    if (!slot) {
      slot = contribution;
      return;
    }
    if (slot->shape() != contribution.shape())
      throw DimensionError("gradient shape mismatch while accumulating into node");
    auto dst = slot->data();
    auto src = contribution.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

 private:
  const std::deque<Tape::Node>& nodes_;
  std::vector<std::optional<Tensor>>& grads_;
};

}  // namespace

Gradients Tape::backward(const Var& root) const {
  if (&root.tape() != this) throw ValueError("backward root belongs to a different tape");
  const Node& root_node = nodes_.at(root.id());
  if (root_node.value.size() != 1)
    throw DimensionError("backward root must be scalar, got " + shape_string(root_node.value.shape()));

  std::vector<std::optional<Tensor>> grads(nodes_.size());
  grads[root.id()] = Tensor(root_node.value.shape(), 1.0);
  VectorSink sink(nodes_, grads);
  // Inputs always precede their consumers, so a single reverse sweep suffices.
  for (NodeId id = root.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!grads[id] || !n.backward) continue;
    n.backward(*grads[id], sink);
  }
  return Gradients(std::move(grads), this);
}

}  // namespace mpath::ad

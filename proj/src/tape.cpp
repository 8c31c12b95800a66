#include "cap/tape.hpp"

#include <algorithm>

namespace cap {

Tape& Var::tape() const {
  if (!tape_) throw ContractViolation("use of an unbound Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(*this); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (consumed_) throw ContractViolation("tape already consumed by backward()");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  if (consumed_) throw ContractViolation("tape already consumed by backward()");
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw ContractViolation("operands recorded on different tapes");
    n.inputs.push_back(in.id());
    n.requires_grad = n.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tape::Node& Tape::node(Var v) const {
  if (&v.tape() != this || v.id() >= nodes_.size())
    throw ContractViolation("Var does not belong to this tape");
  return nodes_[v.id()];
}

const Tensor& Tape::value(Var v) const { return node(v).value; }

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::backward(Var loss) {
  if (consumed_) throw ContractViolation("backward() called twice on the same tape");
  const Node& root = node(loss);
  if (root.value.size() != 1)
    throw ContractViolation("backward() needs a scalar loss, got shape " +
                            to_string(root.value.shape()));
  consumed_ = true;
  if (!root.requires_grad) return;
  nodes_[loss.id()].grad = Tensor(root.value.shape(), 1.0);

  std::vector<const Tensor*> in_values;
  std::vector<Tensor*> in_grads;
  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    in_values.clear();
    in_grads.clear();
    for (auto id : n.inputs) {
      Node& in = nodes_[id];
      in_values.push_back(&in.value);
      if (in.requires_grad) {
        if (in.grad.empty()) in.grad = Tensor(in.value.shape(), 0.0);
        in_grads.push_back(&in.grad);
      } else {
        in_grads.push_back(nullptr);
      }
    }
    n.backward(GradContext{n.value, n.grad, in_values, in_grads});
    // Interior gradients are not observable once propagated.
    if (!n.is_leaf) n.grad = Tensor();
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Tape& common_tape(std::span<const Var> vars) {
  if (vars.empty()) throw ContractViolation("operation needs at least one operand");
  Tape& t = vars.front().tape();
  for (const auto& v : vars)
    if (&v.tape() != &t) throw ContractViolation("operands recorded on different tapes");
  return t;
}

}  // namespace cap

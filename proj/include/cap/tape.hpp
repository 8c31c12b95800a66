#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "cap/tensor.hpp"

namespace cap {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape& tape() const;
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }

 private:
  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Everything a gradient rule sees when the backward pass reaches its node.
struct GradContext {
  const Tensor& output;
  const Tensor& grad_output;
  std::span<const Tensor* const> inputs;
  /// grads[i] is null when input i does not require a gradient.
  std::span<Tensor* const> grads;
};

using BackwardFn = std::function<void(const GradContext&)>;

/**
 * Append-only record of a forward computation for reverse-mode
 * differentiation.
 *
 * Nodes are appended in execution order, so inputs always precede their
 * consumers. A tape supports exactly one backward pass; a second call throws
 * ContractViolation. Not thread-safe: confine each tape to one thread.
 */
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf value. Parameters use requires_grad = true.
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Record an operation result. `backward` is dropped when no input needs a gradient.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1 and runs every gradient rule once, in reverse order.
  void backward(Var loss);
  bool consumed() const noexcept { return consumed_; }

  /// Gradient of the last backward pass; zeros for values the loss did not reach.
  Tensor grad(Var v) const;

  std::size_t num_nodes() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  const Node& node(Var v) const;

  std::deque<Node> nodes_;
  bool consumed_ = false;
};

/// Asserts every Var lives on the same tape and returns it.
Tape& common_tape(std::span<const Var> vars);

}  // namespace cap

// SPDX-License-Identifier: Apache-2.0
//
// Minimal reverse-mode differentiation over coarse-grained tensor ops.
//
// Every op produces a Var whose node keeps its inputs and a backward closure.
// backward() walks the graph in reverse topological order; each closure reads
// the node's own gradient and accumulates into its inputs' gradients.

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "lct/tensor.hpp"

namespace lct {
inline namespace LCT_PRECISION_NS {

struct Node;
using NodePtr = std::shared_ptr<Node>;
using BackwardFn = std::function<void(const Node& self)>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> inputs;
  BackwardFn backward;

  /// Gradient buffer, zero-initialised on first use.
  Tensor& grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  Index dim(std::size_t axis) const { return node_->value.dim(axis); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool has_grad() const { return node_ && !node_->grad.empty(); }
  const Tensor& grad() const { return node_->grad; }
  void zero_grad();

  /// Same value, cut from the graph.
  Var detach() const;

  const NodePtr& node() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  NodePtr node_;
};

inline Var constant(Tensor value) { return Var(std::move(value), false); }
inline Var parameter(Tensor value) { return Var(std::move(value), true); }

bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Wraps a freshly computed value into a graph node. The closure is only kept
/// when recording is enabled and at least one input requires a gradient.
Var make_op(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

/// Gradient sink for an op input, or nullptr when it needs none.
Tensor* grad_sink(const Var& input);

/// Backpropagates from a scalar (or seeded) root.
void backward(const Var& root);
void backward(const Var& root, const Tensor& seed);

}  // namespace LCT_PRECISION_NS
}  // namespace lct

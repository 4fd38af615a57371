// SPDX-License-Identifier: Apache-2.0

#include "lct/autograd.hpp"

#include <unordered_set>

namespace lct {
inline namespace LCT_PRECISION_NS {
namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.empty() && value.numel() > 0) grad = Tensor(value.shape());
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_ && !node_->grad.empty()) node_->grad.fill(0);
}

Var Var::detach() const { return Var(node_->value, false); }

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Var make_op(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  bool needs = false;
  if (t_grad_enabled) {
    for (const Var& v : inputs) needs = needs || v.requires_grad();
  }
  Var out(std::move(value), needs);
  if (needs) {
    const NodePtr& node = out.node();
    node->inputs.reserve(inputs.size());
    for (const Var& v : inputs) node->inputs.push_back(v.node());
    node->backward = std::move(backward);
  }
  return out;
}

Tensor* grad_sink(const Var& input) {
  if (!input.requires_grad()) return nullptr;
  return &input.node()->grad_buffer();
}

void backward(const Var& root) {
  Tensor seed(root.shape(), Real{1});
  backward(root, seed);
}

void backward(const Var& root, const Tensor& seed) {
  check_shape(seed.shape() == root.shape(), "backward seed shape mismatch");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer().add_(seed);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

}  // namespace LCT_PRECISION_NS
}  // namespace lct

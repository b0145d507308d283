#pragma once

// Reverse-mode automatic differentiation over Tensor values.
//
// A Var is a shared handle to a graph node. Ops record their inputs and a
// backward closure when any input requires a gradient and recording is
// enabled; calling backward() on a scalar Var walks the graph in reverse
// topological order and accumulates gradients into every node that requires
// one. Parameters are leaf Vars whose values the optimizer mutates in place.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "forgerecon/tensor.hpp"

namespace forgerecon {

struct Node {
  Tensor value;
  Tensor grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  void accumulate_grad(const Tensor& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  Tensor& mutable_value() { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  Tensor& mutable_grad() { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }
  void zero_grad() { node_->grad = Tensor(); }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Seeds d(root)/d(root) = 1 (root must hold a single element) and
// back-propagates through the recorded graph.
void backward(const Var& root);

// Back-propagates an explicit upstream gradient for a non-scalar root.
void backward(const Var& root, const Tensor& upstream);

bool grad_enabled();

// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds a result node. If recording is enabled and any parent requires a
// gradient, the node keeps its parents and backward closure.
Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn);

}  // namespace forgerecon

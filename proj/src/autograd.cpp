#include "forgerecon/autograd.hpp"

#include <unordered_set>

#include "forgerecon/errors.hpp"

namespace forgerecon {

namespace {
thread_local bool g_grad_enabled = true;
}

void Node::accumulate_grad(const Tensor& g) {
  if (grad.empty()) {
    grad = g;
    return;
  }
  grad += g;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var make_result(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    bool any = false;
    for (const Var& p : parents) any = any || p.requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(parents.size());
      for (Var& p : parents) node->parents.push_back(p.node());
      node->backward_fn = std::move(backward_fn);
    }
  }
  return Var(std::move(node));
}

namespace {

std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  // Iterative post-order DFS.
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Var& root, const Tensor& upstream) {
  if (!root.defined()) throw ConfigError("backward on an undefined Var");
  if (upstream.shape() != root.shape()) {
    throw ShapeError("backward upstream " + shape_str(upstream.shape()) + " does not match root " +
                     shape_str(root.shape()));
  }
  if (!root.requires_grad()) return;
  Node* r = root.node().get();
  const std::vector<Node*> order = topological_order(r);
  r->accumulate_grad(upstream);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void backward(const Var& root) {
  if (!root.defined() || root.value().size() != 1) {
    throw ShapeError("backward() without upstream gradient needs a single-element root");
  }
  backward(root, Tensor(root.shape(), 1.0));
}

}  // namespace forgerecon

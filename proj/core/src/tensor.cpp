#include "cmsa/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "cmsa/errors.hpp"

namespace cmsa {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace detail {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NodePtr new_leaf(Shape shape, std::vector<double> value, bool requires_grad) {
  if (shape_numel(shape) != value.size()) {
    throw DimError("tensor: shape " + shape_to_string(shape) + " does not match " +
                   std::to_string(value.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->leaf = true;
  return node;
}

NodePtr new_result(Shape shape, std::vector<double> value) {
  if (shape_numel(shape) != value.size()) {
    throw DimError("tensor: shape " + shape_to_string(shape) + " does not match " +
                   std::to_string(value.size()) + " values");
  }
#ifndef NDEBUG
  for (double v : value) {
    if (!std::isfinite(v)) throw NumericError("tensor: non-finite value after forward op");
  }
#endif
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  return node;
}

}  // namespace detail

NoGradGuard::NoGradGuard() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = prev_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(detail::new_leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return Tensor(detail::new_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  return Tensor(detail::new_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(detail::new_leaf(Shape{}, std::vector<double>{value}, requires_grad));
}

const Shape& Tensor::shape() const {
  if (!node_) throw UsageError("tensor: undefined handle");
  return node_->shape;
}

std::size_t Tensor::size() const { return shape_numel(shape()); }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::is_leaf() const { return node_ && node_->leaf; }

const double* Tensor::data() const {
  if (!node_) throw UsageError("tensor: undefined handle");
  return node_->value.data();
}

double* Tensor::data() {
  if (!node_) throw UsageError("tensor: undefined handle");
  return node_->value.data();
}

const std::vector<double>& Tensor::values() const {
  if (!node_) throw UsageError("tensor: undefined handle");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("tensor: item() on non-scalar of shape " + shape_to_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw UsageError("tensor: at() with " + std::to_string(index.size()) + " indices on rank " +
                     std::to_string(s.size()));
  }
  std::size_t off = 0;
  std::size_t d = 0;
  for (std::size_t i : index) {
    if (i >= s[d]) throw UsageError("tensor: index out of range in at()");
    off = off * s[d] + i;
    ++d;
  }
  return node_->value[off];
}

const std::vector<double>& Tensor::grad() const {
  if (!requires_grad()) throw UsageError("tensor: grad() on an untracked tensor");
  if (!node_->leaf) throw UsageError("tensor: grad() is kept for leaf tensors only");
  if (node_->grad.empty()) node_->grad.assign(size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_) return;
  if (!node_->grad.empty()) node_->grad.assign(node_->grad.size(), 0.0);
}

void Tensor::accumulate_grad(const std::vector<double>& delta) {
  if (!requires_grad()) throw UsageError("tensor: accumulate_grad() on an untracked tensor");
  if (delta.size() != size()) throw DimError("tensor: gradient size mismatch in accumulate_grad()");
  if (node_->grad.empty()) node_->grad.assign(size(), 0.0);
  for (std::size_t i = 0; i < delta.size(); ++i) node_->grad[i] += delta[i];
}

namespace {

// Post-order over the tracked part of the graph; root comes last.
std::vector<detail::NodePtr> topo_order(const detail::NodePtr& root) {
  std::vector<detail::NodePtr> order;
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<detail::NodePtr, std::size_t>> stack;
  visited.insert(root.get());
  stack.emplace_back(root, 0);
  while (!stack.empty()) {
    detail::NodePtr n = stack.back().first;
    std::size_t i = stack.back().second;
    if (i < n->parents.size()) {
      ++stack.back().second;
      const detail::NodePtr& p = n->parents[i];
      if (p->requires_grad && !visited.count(p.get())) {
        visited.insert(p.get());
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  return order;
}

struct GradBuffers {
  std::unordered_map<const detail::Node*, std::vector<double>> map;

  std::vector<double>& ensure(const detail::Node* n) {
    auto it = map.find(n);
    if (it == map.end()) {
      it = map.emplace(n, std::vector<double>(shape_numel(n->shape), 0.0)).first;
    }
    return it->second;
  }
};

std::vector<std::pair<detail::NodePtr, std::vector<double>>> sweep(const Tensor& loss) {
  if (!loss.defined()) throw UsageError("backward: undefined loss tensor");
  if (loss.size() != 1) {
    throw UsageError("backward: loss must be scalar, got shape " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward: loss does not require grad (no graph was recorded)");
  }

  auto order = topo_order(loss.node());
  GradBuffers bufs;
  bufs.ensure(loss.node().get())[0] = 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = it->get();
    if (n->leaf || !n->backward) continue;
    const std::vector<double>& og = bufs.ensure(n);
    std::vector<double*> pg(n->parents.size(), nullptr);
    for (std::size_t i = 0; i < n->parents.size(); ++i) {
      if (n->parents[i]->requires_grad) pg[i] = bufs.ensure(n->parents[i].get()).data();
    }
    n->backward(og.data(), pg);
  }

  std::vector<std::pair<detail::NodePtr, std::vector<double>>> leaf_grads;
  for (const auto& n : order) {
    if (!n->leaf || !n->requires_grad) continue;
    auto it = bufs.map.find(n.get());
    if (it == bufs.map.end()) continue;
    leaf_grads.emplace_back(n, std::move(it->second));
  }
  return leaf_grads;
}

}  // namespace

void backward(const Tensor& loss) {
  for (auto& [node, g] : sweep(loss)) {
    if (node->grad.empty()) node->grad.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) node->grad[i] += g[i];
  }
}

std::vector<std::pair<Tensor, std::vector<double>>> backward_collect(const Tensor& loss) {
  std::vector<std::pair<Tensor, std::vector<double>>> out;
  for (auto& [node, g] : sweep(loss)) out.emplace_back(Tensor(node), std::move(g));
  return out;
}

}  // namespace cmsa

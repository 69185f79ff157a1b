#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace cmsa {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One vertex of the define-by-run graph. The graph is a DAG over `parents`;
// it is rebuilt on every forward pass and torn down when the last handle
// goes away. `backward` scatters the node's upstream gradient into buffers
// supplied by the sweep (one per parent, null for untracked parents).
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // persistent, tracked leaves only
  bool requires_grad = false;
  bool leaf = true;
  std::vector<NodePtr> parents;
  std::function<void(const double* out_grad, const std::vector<double*>& parent_grads)> backward;
};

NodePtr new_leaf(Shape shape, std::vector<double> value, bool requires_grad);
// Result of a forward op. Debug builds reject non-finite entries here.
NodePtr new_result(Shape shape, std::vector<double> value);
bool grad_enabled();

}  // namespace detail

/// Suspends graph construction while alive; forward values still computed.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

/// Dense row-major f64 tensor; value-semantic handle onto a graph node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(detail::NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  bool requires_grad() const;
  bool is_leaf() const;

  const double* data() const;
  double* data();
  const std::vector<double>& values() const;
  double item() const;  // scalar tensors only
  double at(std::initializer_list<std::size_t> index) const;

  /// Gradient buffer of a tracked leaf (zero-initialised on first access).
  const std::vector<double>& grad() const;
  void zero_grad();
  void accumulate_grad(const std::vector<double>& delta);

  detail::NodePtr node() const { return node_; }

 private:
  detail::NodePtr node_;
};

/// Reverse sweep from a scalar loss. Gradients of tracked leaves accumulate
/// into their grad buffers; calling twice without zeroing doubles them.
void backward(const Tensor& loss);

/// Same sweep, but leaf gradients are returned (in topological order)
/// instead of touching the leaves. Callers use this for ordered
/// cross-sample reductions, which keeps results independent of threading.
std::vector<std::pair<Tensor, std::vector<double>>> backward_collect(const Tensor& loss);

}  // namespace cmsa

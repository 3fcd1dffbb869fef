#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "snn/errors.hpp"

namespace snn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  // Empty until first written. Leaves accumulate across backward calls,
  // interior nodes are cleared at the start of every pass.
  std::vector<T> grad;
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into inputs[i]->grad.
  std::function<void(Node&)> backward;

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor with an optional gradient buffer.
///
/// A TensorT is a handle: copies share storage and graph position, which is
/// what lets the recorded graph route gradients back to parameters. Use
/// detach() for an independent copy.
template <typename T>
class TensorT {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  TensorT() = default;
  explicit TensorT(Shape shape, T fill = T(0), bool requires_grad = false);
  TensorT(Shape shape, std::vector<T> values, bool requires_grad = false);

  static TensorT scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T operator[](std::size_t i) const { return node_->data[i]; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  TensorT& set_requires_grad(bool on);
  bool is_leaf() const { return node_->is_leaf; }

  /// Gradient buffer; all zeros when nothing has flowed into this tensor.
  std::span<const T> grad() const { return node_->ensure_grad(); }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate.
  void backward() const;

  /// Fresh leaf holding a copy of the values, cut from the graph.
  TensorT detach() const;

  const NodePtr& node() const { return node_; }
  static TensorT from_node(NodePtr node) {
    TensorT t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  NodePtr node_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

/// Process-wide switch (per thread) for graph recording.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Builds an op result. The backward closure is attached only when grad mode
/// is on and some input requires grad; otherwise the result is a plain leaf.
template <typename T>
TensorT<T> make_result(Shape shape, std::vector<T> values,
                       std::vector<TensorT<T>> inputs,
                       std::function<void(detail::Node<T>&)> backward);

/// True iff every value is exactly 0 or 1.
template <typename T>
bool is_binary(std::span<const T> values);

}  // namespace snn

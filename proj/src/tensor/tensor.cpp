#include "snn/tensor/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace snn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
}
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
TensorT<T>::TensorT(Shape shape, T fill, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  check_shape(shape);
  node_->data.assign(shape_numel(shape), fill);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

template <typename T>
TensorT<T>::TensorT(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<detail::Node<T>>()) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("shape " + shape_str(shape) + " holds " +
                     std::to_string(shape_numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  node_->data = std::move(values);
  node_->shape = std::move(shape);
  node_->requires_grad = requires_grad;
}

template <typename T>
TensorT<T> TensorT<T>::scalar(T value, bool requires_grad) {
  return TensorT(Shape{1}, value, requires_grad);
}

template <typename T>
std::size_t TensorT<T>::dim(std::size_t i) const {
  if (i >= rank()) {
    throw ShapeError("dim " + std::to_string(i) + " out of range for " + shape_str(shape()));
  }
  return node_->shape[i];
}

template <typename T>
T TensorT<T>::item() const {
  if (numel() != 1) throw UsageError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

template <typename T>
TensorT<T>& TensorT<T>::set_requires_grad(bool on) {
  if (!node_->is_leaf) throw UsageError("requires_grad can only be set on leaf tensors");
  node_->requires_grad = on;
  return *this;
}

template <typename T>
void TensorT<T>::zero_grad() {
  std::fill(node_->grad.begin(), node_->grad.end(), T(0));
}

template <typename T>
void TensorT<T>::backward() const {
  if (!defined() || numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " +
                     (defined() ? shape_str(shape()) : std::string("<undefined>")));
  }
  if (!node_->requires_grad) {
    throw UsageError("backward() on a tensor that does not require grad");
  }

  using NodeT = detail::Node<T>;
  // Iterative post-order DFS; `order` ends up topologically sorted with
  // inputs before consumers.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> visited;
  std::vector<std::pair<NodeT*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      NodeT* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (NodeT* n : order) {
    if (!n->is_leaf) n->grad.assign(n->data.size(), T(0));
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* n = *it;
    if (n->backward) n->backward(*n);
  }
}

template <typename T>
TensorT<T> TensorT<T>::detach() const {
  return TensorT(node_->shape, node_->data, false);
}

template <typename T>
TensorT<T> make_result(Shape shape, std::vector<T> values,
                       std::vector<TensorT<T>> inputs,
                       std::function<void(detail::Node<T>&)> backward) {
  TensorT<T> out(std::move(shape), std::move(values), false);
  if (!grad_enabled()) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  node.is_leaf = false;
  node.inputs.reserve(inputs.size());
  for (auto& in : inputs) node.inputs.push_back(in.node());
  node.backward = std::move(backward);
  return out;
}

template <typename T>
bool is_binary(std::span<const T> values) {
  return std::all_of(values.begin(), values.end(),
                     [](T v) { return v == T(0) || v == T(1); });
}

template class TensorT<float>;
template class TensorT<double>;
template TensorT<float> make_result(Shape, std::vector<float>, std::vector<TensorT<float>>,
                                    std::function<void(detail::Node<float>&)>);
template TensorT<double> make_result(Shape, std::vector<double>, std::vector<TensorT<double>>,
                                     std::function<void(detail::Node<double>&)>);
template bool is_binary(std::span<const float>);
template bool is_binary(std::span<const double>);

}  // namespace snn

#pragma once

#include <functional>

#include "snn/tensor/tensor.hpp"

namespace snn {

// Element-wise binary ops broadcast `b` over trailing singleton dimensions
// only: after right-padding b's shape with 1s, it must equal a's shape on a
// leading block and be 1 everywhere after it (a scalar always qualifies).

template <typename T> TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b);
template <typename T> TensorT<T> scale(const TensorT<T>& a, T factor);
template <typename T> TensorT<T> add_scalar(const TensorT<T>& a, T offset);

/// 1 - a on {0,1}; throws DomainError on any other value.
template <typename T> TensorT<T> logical_not(const TensorT<T>& a);
/// a * b on {0,1}; same shape required.
template <typename T> TensorT<T> logical_and(const TensorT<T>& a, const TensorT<T>& b);

enum class ElementwiseKind { add, mul, logical_and_binary, logical_not_binary };
/// Dispatcher over the element-wise family; `b` is ignored for logical_not.
template <typename T>
TensorT<T> elementwise(ElementwiseKind kind, const TensorT<T>& a,
                       const TensorT<T>* b = nullptr);

template <typename T> TensorT<T> relu(const TensorT<T>& a);
template <typename T> TensorT<T> sigmoid(const TensorT<T>& a);

template <typename T> TensorT<T> sum(const TensorT<T>& a);
template <typename T> TensorT<T> mean(const TensorT<T>& a);

template <typename T> TensorT<T> reshape(const TensorT<T>& a, Shape shape);
/// Slice index `i` along dim 0, dropping that dim.
template <typename T> TensorT<T> select(const TensorT<T>& a, std::size_t i);
/// Inverse of select: stacks equal-shaped tensors along a new dim 0.
template <typename T> TensorT<T> stack(const std::vector<TensorT<T>>& parts);
/// Mean over dim 0.
template <typename T> TensorT<T> mean_dim0(const TensorT<T>& a);

/// forward emits forward_fn(x); backward multiplies the upstream gradient by
/// backward_fn(x) element-wise.
template <typename T>
TensorT<T> custom_grad_apply(const std::function<T(T)>& forward_fn,
                             const std::function<T(T)>& backward_fn,
                             const TensorT<T>& input);

struct Conv2dGeometry {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t in_h = 0;
  std::size_t in_w = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel_w) / stride + 1; }
};

/// Cross-correlation. input [B,Cin,H,W], weight [Cout,Cin,Kh,Kw].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const TensorT<T>& weight,
                  std::size_t stride, std::size_t padding);

/// input [B,N], weight [M,N], bias [M] (bias may be undefined).
template <typename T>
TensorT<T> linear(const TensorT<T>& input, const TensorT<T>& weight,
                  const TensorT<T>& bias);

/// Floor semantics, no padding. input [B,C,H,W].
template <typename T>
TensorT<T> avg_pool2d(const TensorT<T>& input, std::size_t kernel,
                      std::size_t stride);
/// [B,C,H,W] -> [B,C].
template <typename T> TensorT<T> global_avg_pool(const TensorT<T>& input);
/// Padding positions never win. input [B,C,H,W].
template <typename T>
TensorT<T> max_pool2d(const TensorT<T>& input, std::size_t kernel,
                      std::size_t stride, std::size_t padding);

}  // namespace snn

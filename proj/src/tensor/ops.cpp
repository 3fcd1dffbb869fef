#include "snn/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace snn {
namespace {

// Number of consecutive `a` elements that share one `b` element.
std::size_t broadcast_repeat(const Shape& a, const Shape& b, const char* op) {
  const std::size_t an = shape_numel(a);
  const std::size_t bn = shape_numel(b);
  if (bn == 1) return an;
  auto fail = [&] {
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(b) + " onto " +
                     shape_str(a) + " (only trailing singleton dims broadcast)");
  };
  if (b.size() > a.size()) fail();
  std::size_t k = 0;
  while (k < a.size() && k < b.size() && b[k] == a[k]) ++k;
  for (std::size_t i = k; i < b.size(); ++i) {
    if (b[i] != 1) fail();
  }
  std::size_t repeat = 1;
  for (std::size_t i = k; i < a.size(); ++i) repeat *= a[i];
  if (bn * repeat != an) fail();
  return repeat;
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
  }
}

template <typename T>
void require_binary(const TensorT<T>& t, const char* op) {
  if (!is_binary(t.data())) {
    throw DomainError(std::string(op) + ": operand must contain only 0 and 1");
  }
}

template <typename T>
using NodeT = detail::Node<T>;

enum class Binary { add, sub, mul };

template <typename T>
TensorT<T> binary_op(const TensorT<T>& a, const TensorT<T>& b, Binary kind, const char* name) {
  const std::size_t r = broadcast_repeat(a.shape(), b.shape(), name);
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const T y = bv[i / r];
    switch (kind) {
      case Binary::add: out[i] = av[i] + y; break;
      case Binary::sub: out[i] = av[i] - y; break;
      case Binary::mul: out[i] = av[i] * y; break;
    }
  }
  return make_result<T>(a.shape(), std::move(out), {a, b}, [r, kind](NodeT<T>& self) {
    auto& na = *self.inputs[0];
    auto& nb = *self.inputs[1];
    const auto& g = self.grad;
    if (na.requires_grad) {
      auto& ga = na.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] += kind == Binary::mul ? g[i] * nb.data[i / r] : g[i];
      }
    }
    if (nb.requires_grad) {
      auto& gb = nb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        T d = g[i];
        if (kind == Binary::sub) d = -d;
        if (kind == Binary::mul) d *= na.data[i];
        gb[i / r] += d;
      }
    }
  });
}

template <typename T>
TensorT<T> unary_map(const TensorT<T>& a, const std::function<T(T)>& f,
                     std::function<void(NodeT<T>&)> backward) {
  const auto av = a.data();
  std::vector<T> out(av.size());
  std::transform(av.begin(), av.end(), out.begin(), f);
  return make_result<T>(a.shape(), std::move(out), {a}, std::move(backward));
}

}  // namespace

template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  return binary_op(a, b, Binary::add, "add");
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  return binary_op(a, b, Binary::sub, "sub");
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  return binary_op(a, b, Binary::mul, "mul");
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T factor) {
  return unary_map<T>(a, [factor](T x) { return x * factor; }, [factor](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * factor;
  });
}

template <typename T>
TensorT<T> add_scalar(const TensorT<T>& a, T offset) {
  return unary_map<T>(a, [offset](T x) { return x + offset; }, [](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

template <typename T>
TensorT<T> logical_not(const TensorT<T>& a) {
  require_binary(a, "logical_not");
  return unary_map<T>(a, [](T x) { return T(1) - x; }, [](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] -= self.grad[i];
  });
}

template <typename T>
TensorT<T> logical_and(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a.shape(), b.shape(), "logical_and");
  require_binary(a, "logical_and");
  require_binary(b, "logical_and");
  return binary_op(a, b, Binary::mul, "logical_and");
}

template <typename T>
TensorT<T> elementwise(ElementwiseKind kind, const TensorT<T>& a, const TensorT<T>* b) {
  if (kind != ElementwiseKind::logical_not_binary && b == nullptr) {
    throw UsageError("elementwise: binary op needs a second operand");
  }
  switch (kind) {
    case ElementwiseKind::add: return add(a, *b);
    case ElementwiseKind::mul: return mul(a, *b);
    case ElementwiseKind::logical_and_binary: return logical_and(a, *b);
    case ElementwiseKind::logical_not_binary: return logical_not(a);
  }
  throw UsageError("elementwise: unknown op");
}

template <typename T>
TensorT<T> relu(const TensorT<T>& a) {
  return unary_map<T>(a, [](T x) { return x > T(0) ? x : T(0); }, [](NodeT<T>& self) {
    auto& in = *self.inputs[0];
    auto& ga = in.ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (in.data[i] > T(0)) ga[i] += self.grad[i];
    }
  });
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& a) {
  return unary_map<T>(a, [](T x) { return T(1) / (T(1) + std::exp(-x)); }, [](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const T s = self.data[i];
      ga[i] += self.grad[i] * s * (T(1) - s);
    }
  });
}

template <typename T>
TensorT<T> sum(const TensorT<T>& a) {
  T acc = 0;
  for (T v : a.data()) acc += v;
  return make_result<T>({1}, {acc}, {a}, [](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (auto& g : ga) g += self.grad[0];
  });
}

template <typename T>
TensorT<T> mean(const TensorT<T>& a) {
  const T n = static_cast<T>(a.numel());
  T acc = 0;
  for (T v : a.data()) acc += v;
  return make_result<T>({1}, {acc / n}, {a}, [n](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (auto& g : ga) g += self.grad[0] / n;
  });
}

template <typename T>
TensorT<T> reshape(const TensorT<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>(std::move(shape), std::move(out), {a}, [](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i];
  });
}

template <typename T>
TensorT<T> select(const TensorT<T>& a, std::size_t index) {
  if (index >= a.dim(0)) {
    throw ShapeError("select: index " + std::to_string(index) + " out of range for " +
                     shape_str(a.shape()));
  }
  Shape shape(a.shape().begin() + 1, a.shape().end());
  if (shape.empty()) shape = {1};
  const std::size_t inner = shape_numel(shape);
  const std::size_t offset = index * inner;
  std::vector<T> out(a.data().begin() + offset, a.data().begin() + offset + inner);
  return make_result<T>(std::move(shape), std::move(out), {a}, [offset, inner](NodeT<T>& self) {
    auto& ga = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < inner; ++i) ga[offset + i] += self.grad[i];
  });
}

template <typename T>
TensorT<T> stack(const std::vector<TensorT<T>>& parts) {
  if (parts.empty()) throw UsageError("stack: empty input");
  const Shape& inner_shape = parts.front().shape();
  const std::size_t inner = parts.front().numel();
  std::vector<T> out;
  out.reserve(inner * parts.size());
  for (const auto& p : parts) {
    require_same_shape(inner_shape, p.shape(), "stack");
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner_shape.begin(), inner_shape.end());
  return make_result<T>(std::move(shape), std::move(out), parts, [inner](NodeT<T>& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      auto& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      auto& g = in.ensure_grad();
      for (std::size_t i = 0; i < inner; ++i) g[i] += self.grad[k * inner + i];
    }
  });
}

template <typename T>
TensorT<T> mean_dim0(const TensorT<T>& a) {
  const std::size_t steps = a.dim(0);
  Shape shape(a.shape().begin() + 1, a.shape().end());
  if (shape.empty()) shape = {1};
  const std::size_t inner = shape_numel(shape);
  const auto av = a.data();
  std::vector<T> out(inner, T(0));
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t i = 0; i < inner; ++i) out[i] += av[t * inner + i];
  }
  const T inv = T(1) / static_cast<T>(steps);
  for (auto& v : out) v *= inv;
  return make_result<T>(std::move(shape), std::move(out), {a},
                        [steps, inner, inv](NodeT<T>& self) {
                          auto& ga = self.inputs[0]->ensure_grad();
                          for (std::size_t t = 0; t < steps; ++t) {
                            for (std::size_t i = 0; i < inner; ++i) {
                              ga[t * inner + i] += self.grad[i] * inv;
                            }
                          }
                        });
}

template <typename T>
TensorT<T> custom_grad_apply(const std::function<T(T)>& forward_fn,
                             const std::function<T(T)>& backward_fn, const TensorT<T>& input) {
  return unary_map<T>(input, forward_fn, [backward_fn](NodeT<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * backward_fn(in.data[i]);
  });
}

template <typename T>
TensorT<T> linear(const TensorT<T>& input, const TensorT<T>& weight, const TensorT<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || input.dim(1) != weight.dim(1)) {
    throw ShapeError("linear: input " + shape_str(input.shape()) + " incompatible with weight " +
                     shape_str(weight.shape()));
  }
  const std::size_t batch = input.dim(0), n = input.dim(1), m = weight.dim(0);
  const bool has_bias = bias.defined();
  if (has_bias && (bias.numel() != m)) {
    throw ShapeError("linear: bias " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(m) + " outputs");
  }
  const auto x = input.data();
  const auto w = weight.data();
  std::vector<T> out(batch * m);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < m; ++j) {
      T acc = has_bias ? bias[j] : T(0);
      for (std::size_t i = 0; i < n; ++i) acc += x[b * n + i] * w[j * n + i];
      out[b * m + j] = acc;
    }
  }
  std::vector<TensorT<T>> inputs{input, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result<T>({batch, m}, std::move(out), std::move(inputs),
                        [batch, n, m, has_bias](NodeT<T>& self) {
                          auto& nx = *self.inputs[0];
                          auto& nw = *self.inputs[1];
                          const auto& g = self.grad;
                          if (nx.requires_grad) {
                            auto& gx = nx.ensure_grad();
                            for (std::size_t b = 0; b < batch; ++b)
                              for (std::size_t j = 0; j < m; ++j)
                                for (std::size_t i = 0; i < n; ++i)
                                  gx[b * n + i] += g[b * m + j] * nw.data[j * n + i];
                          }
                          if (nw.requires_grad) {
                            auto& gw = nw.ensure_grad();
                            for (std::size_t b = 0; b < batch; ++b)
                              for (std::size_t j = 0; j < m; ++j)
                                for (std::size_t i = 0; i < n; ++i)
                                  gw[j * n + i] += g[b * m + j] * nx.data[b * n + i];
                          }
                          if (has_bias && self.inputs[2]->requires_grad) {
                            auto& gb = self.inputs[2]->ensure_grad();
                            for (std::size_t b = 0; b < batch; ++b)
                              for (std::size_t j = 0; j < m; ++j) gb[j] += g[b * m + j];
                          }
                        });
}

template <typename T>
TensorT<T> avg_pool2d(const TensorT<T>& input, std::size_t kernel, std::size_t stride) {
  if (input.rank() != 4) throw ShapeError("avg_pool2d: expected [B,C,H,W], got " + shape_str(input.shape()));
  if (kernel == 0 || stride == 0) throw UsageError("avg_pool2d: kernel and stride must be positive");
  const std::size_t bc = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  if (kernel > h || kernel > w) {
    throw ShapeError("avg_pool2d: window " + std::to_string(kernel) + " larger than input " +
                     shape_str(input.shape()));
  }
  const std::size_t oh = (h - kernel) / stride + 1, ow = (w - kernel) / stride + 1;
  const T inv = T(1) / static_cast<T>(kernel * kernel);
  const auto x = input.data();
  std::vector<T> out(bc * oh * ow);
  for (std::size_t p = 0; p < bc; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T acc = 0;
        for (std::size_t ky = 0; ky < kernel; ++ky)
          for (std::size_t kx = 0; kx < kernel; ++kx)
            acc += x[(p * h + oy * stride + ky) * w + ox * stride + kx];
        out[(p * oh + oy) * ow + ox] = acc * inv;
      }
  return make_result<T>({input.dim(0), input.dim(1), oh, ow}, std::move(out), {input},
                        [=](NodeT<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t p = 0; p < bc; ++p)
                            for (std::size_t oy = 0; oy < oh; ++oy)
                              for (std::size_t ox = 0; ox < ow; ++ox) {
                                const T d = self.grad[(p * oh + oy) * ow + ox] * inv;
                                for (std::size_t ky = 0; ky < kernel; ++ky)
                                  for (std::size_t kx = 0; kx < kernel; ++kx)
                                    g[(p * h + oy * stride + ky) * w + ox * stride + kx] += d;
                              }
                        });
}

template <typename T>
TensorT<T> global_avg_pool(const TensorT<T>& input) {
  if (input.rank() != 4) {
    throw ShapeError("global_avg_pool: expected [B,C,H,W], got " + shape_str(input.shape()));
  }
  const std::size_t bc = input.dim(0) * input.dim(1), hw = input.dim(2) * input.dim(3);
  const T inv = T(1) / static_cast<T>(hw);
  const auto x = input.data();
  std::vector<T> out(bc);
  for (std::size_t p = 0; p < bc; ++p) {
    T acc = 0;
    for (std::size_t i = 0; i < hw; ++i) acc += x[p * hw + i];
    out[p] = acc * inv;
  }
  return make_result<T>({input.dim(0), input.dim(1)}, std::move(out), {input},
                        [bc, hw, inv](NodeT<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t p = 0; p < bc; ++p)
                            for (std::size_t i = 0; i < hw; ++i) g[p * hw + i] += self.grad[p] * inv;
                        });
}

template <typename T>
TensorT<T> max_pool2d(const TensorT<T>& input, std::size_t kernel, std::size_t stride,
                      std::size_t padding) {
  if (input.rank() != 4) throw ShapeError("max_pool2d: expected [B,C,H,W], got " + shape_str(input.shape()));
  if (kernel == 0 || stride == 0) throw UsageError("max_pool2d: kernel and stride must be positive");
  const std::size_t bc = input.dim(0) * input.dim(1), h = input.dim(2), w = input.dim(3);
  if (kernel > h + 2 * padding || kernel > w + 2 * padding || padding * 2 > kernel) {
    throw ShapeError("max_pool2d: window " + std::to_string(kernel) + " incompatible with input " +
                     shape_str(input.shape()));
  }
  const std::size_t oh = (h + 2 * padding - kernel) / stride + 1;
  const std::size_t ow = (w + 2 * padding - kernel) / stride + 1;
  const auto x = input.data();
  std::vector<T> out(bc * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t p = 0; p < bc; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) -
                                    static_cast<std::ptrdiff_t>(padding);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) -
                                      static_cast<std::ptrdiff_t>(padding);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
            const std::size_t idx = (p * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix);
            if (x[idx] > best) {
              best = x[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t o = (p * oh + oy) * ow + ox;
        out[o] = best;
        argmax[o] = best_idx;
      }
  return make_result<T>({input.dim(0), input.dim(1), oh, ow}, std::move(out), {input},
                        [argmax = std::move(argmax)](NodeT<T>& self) {
                          auto& g = self.inputs[0]->ensure_grad();
                          for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
                        });
}

#define SNN_INSTANTIATE_OPS(T)                                                                   \
  template TensorT<T> add(const TensorT<T>&, const TensorT<T>&);                                \
  template TensorT<T> sub(const TensorT<T>&, const TensorT<T>&);                                \
  template TensorT<T> mul(const TensorT<T>&, const TensorT<T>&);                                \
  template TensorT<T> scale(const TensorT<T>&, T);                                              \
  template TensorT<T> add_scalar(const TensorT<T>&, T);                                         \
  template TensorT<T> logical_not(const TensorT<T>&);                                           \
  template TensorT<T> logical_and(const TensorT<T>&, const TensorT<T>&);                        \
  template TensorT<T> elementwise(ElementwiseKind, const TensorT<T>&, const TensorT<T>*);       \
  template TensorT<T> relu(const TensorT<T>&);                                                  \
  template TensorT<T> sigmoid(const TensorT<T>&);                                               \
  template TensorT<T> sum(const TensorT<T>&);                                                   \
  template TensorT<T> mean(const TensorT<T>&);                                                  \
  template TensorT<T> reshape(const TensorT<T>&, Shape);                                        \
  template TensorT<T> select(const TensorT<T>&, std::size_t);                                   \
  template TensorT<T> stack(const std::vector<TensorT<T>>&);                                    \
  template TensorT<T> mean_dim0(const TensorT<T>&);                                             \
  template TensorT<T> custom_grad_apply(const std::function<T(T)>&, const std::function<T(T)>&, \
                                        const TensorT<T>&);                                     \
  template TensorT<T> linear(const TensorT<T>&, const TensorT<T>&, const TensorT<T>&);          \
  template TensorT<T> avg_pool2d(const TensorT<T>&, std::size_t, std::size_t);                  \
  template TensorT<T> global_avg_pool(const TensorT<T>&);                                       \
  template TensorT<T> max_pool2d(const TensorT<T>&, std::size_t, std::size_t, std::size_t);

SNN_INSTANTIATE_OPS(float)
SNN_INSTANTIATE_OPS(double)

}  // namespace snn

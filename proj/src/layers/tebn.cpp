#include <cmath>

#include "snn/layers/functional.hpp"

namespace snn::layers {

template <typename T>
TEBNLayer<T> TEBNLayer<T>::make(std::size_t channels, std::size_t timesteps, bool temporal) {
  if (channels == 0) throw ConfigError("TEBN: channel count must be positive");
  TEBNLayer layer;
  layer.gamma = TensorT<T>({channels}, T(1), true);
  layer.beta = TensorT<T>({channels}, T(0), true);
  layer.running_mean = TensorT<T>({channels}, T(0));
  layer.running_var = TensorT<T>({channels}, T(1));
  layer.temporal = temporal;
  if (temporal) {
    if (timesteps == 0) throw ConfigError("TEBN: timestep count must be positive");
    layer.p = TensorT<T>({timesteps}, T(1), true);
  }
  return layer;
}

template <typename T>
TensorT<T> tebn_forward(const TensorT<T>& x_seq, TEBNLayer<T>& layer, bool training) {
  if (x_seq.rank() < 3) {
    throw ShapeError("tebn_forward: expected [T,B,C,...], got " + shape_str(x_seq.shape()));
  }
  const std::size_t steps = x_seq.dim(0), batch = x_seq.dim(1), channels = x_seq.dim(2);
  if (channels != layer.channels()) {
    throw ShapeError("tebn_forward: input has " + std::to_string(channels) +
                     " channels, layer has " + std::to_string(layer.channels()));
  }
  if (layer.temporal && layer.p.numel() != steps) {
    throw ConfigError("tebn_forward: input has " + std::to_string(steps) +
                      " timesteps but p[t] has " + std::to_string(layer.p.numel()));
  }
  const std::size_t inner = x_seq.numel() / (steps * batch * channels);
  const std::size_t count = steps * batch * inner;
  const auto x = x_seq.data();

  // Index of element (t, b, c, k) is ((t*B + b)*C + c)*inner + k.
  auto for_channel = [&](std::size_t c, auto&& fn) {
    for (std::size_t tb = 0; tb < steps * batch; ++tb) {
      const std::size_t base = (tb * channels + c) * inner;
      for (std::size_t k = 0; k < inner; ++k) fn(tb / batch, base + k);
    }
  };

  std::vector<T> mean(channels), inv_std(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    if (training) {
      double acc = 0;
      for_channel(c, [&](std::size_t, std::size_t i) { acc += x[i]; });
      const double mu = acc / static_cast<double>(count);
      double sq = 0;
      for_channel(c, [&](std::size_t, std::size_t i) {
        const double d = x[i] - mu;
        sq += d * d;
      });
      const double var = sq / static_cast<double>(count);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + layer.eps));
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      auto rm = layer.running_mean.data();
      auto rv = layer.running_var.data();
      rm[c] = static_cast<T>((1.0 - layer.momentum) * rm[c] + layer.momentum * mu);
      rv[c] = static_cast<T>((1.0 - layer.momentum) * rv[c] + layer.momentum * unbiased);
    } else {
      mean[c] = layer.running_mean[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(layer.running_var[c]) + layer.eps));
    }
  }

  std::vector<T> pt(steps, T(1));
  if (layer.temporal) {
    for (std::size_t t = 0; t < steps; ++t) pt[t] = layer.p[t];
  }
  std::vector<T> xhat(x.size()), out(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    const T g = layer.gamma[c], b = layer.beta[c];
    for_channel(c, [&](std::size_t t, std::size_t i) {
      xhat[i] = (x[i] - mean[c]) * inv_std[c];
      out[i] = pt[t] * (g * xhat[i] + b);
    });
  }

  std::vector<TensorT<T>> inputs{x_seq, layer.gamma, layer.beta};
  if (layer.temporal) inputs.push_back(layer.p);
  const bool temporal = layer.temporal;
  return make_result<T>(
      x_seq.shape(), std::move(out), std::move(inputs),
      [=, xhat = std::move(xhat)](detail::Node<T>& self) {
        auto& nx = *self.inputs[0];
        auto& ng = *self.inputs[1];
        auto& nb = *self.inputs[2];
        detail::Node<T>* np = temporal ? self.inputs[3].get() : nullptr;
        const auto& gy = self.grad;
        auto channel_loop = [&](std::size_t c, auto&& fn) {
          for (std::size_t tb = 0; tb < steps * batch; ++tb) {
            const std::size_t base = (tb * channels + c) * inner;
            for (std::size_t k = 0; k < inner; ++k) fn(tb / batch, base + k);
          }
        };
        for (std::size_t c = 0; c < channels; ++c) {
          const T gamma = ng.data[c], beta = nb.data[c];
          T dgamma = 0, dbeta = 0, sum_dxhat = 0, sum_dxhat_xhat = 0;
          channel_loop(c, [&](std::size_t t, std::size_t i) {
            dgamma += pt[t] * xhat[i] * gy[i];
            dbeta += pt[t] * gy[i];
            const T dxh = pt[t] * gamma * gy[i];
            sum_dxhat += dxh;
            sum_dxhat_xhat += dxh * xhat[i];
          });
          if (ng.requires_grad) ng.ensure_grad()[c] += dgamma;
          if (nb.requires_grad) nb.ensure_grad()[c] += dbeta;
          if (np && np->requires_grad) {
            auto& gp = np->ensure_grad();
            channel_loop(c, [&](std::size_t t, std::size_t i) {
              gp[t] += (gamma * xhat[i] + beta) * gy[i];
            });
          }
          if (nx.requires_grad) {
            auto& gx = nx.ensure_grad();
            const T n = static_cast<T>(count);
            const T m1 = sum_dxhat / n, m2 = sum_dxhat_xhat / n;
            channel_loop(c, [&](std::size_t t, std::size_t i) {
              const T dxh = pt[t] * gamma * gy[i];
              gx[i] += training ? inv_std[c] * (dxh - m1 - xhat[i] * m2) : inv_std[c] * dxh;
            });
          }
        }
      });
}

template struct TEBNLayer<float>;
template struct TEBNLayer<double>;
template TensorT<float> tebn_forward(const TensorT<float>&, TEBNLayer<float>&, bool);
template TensorT<double> tebn_forward(const TensorT<double>&, TEBNLayer<double>&, bool);

}  // namespace snn::layers

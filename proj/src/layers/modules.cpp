#include <cmath>

#include "snn/layers/modules.hpp"

namespace snn::layers {
namespace {

Shape split_time(const Shape& merged, std::size_t timesteps) {
  if (merged.empty() || merged[0] % timesteps != 0) {
    throw ShapeError("cannot split leading dim of " + shape_str(merged) + " into " +
                     std::to_string(timesteps) + " timesteps");
  }
  Shape s{timesteps, merged[0] / timesteps};
  s.insert(s.end(), merged.begin() + 1, merged.end());
  return s;
}

}  // namespace

Conv2d Conv2d::make(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                    std::size_t stride, std::size_t padding, std::mt19937_64& rng) {
  Conv2d conv;
  conv.name = std::move(name);
  conv.stride = stride;
  conv.padding = padding;
  // Kaiming normal, fan-out mode.
  const double std_dev = std::sqrt(2.0 / static_cast<double>(out_ch * kernel * kernel));
  std::normal_distribution<double> dist(0.0, std_dev);
  std::vector<float> w(out_ch * in_ch * kernel * kernel);
  for (auto& v : w) v = static_cast<float>(dist(rng));
  conv.weight = Tensor({out_ch, in_ch, kernel, kernel}, std::move(w), true);
  return conv;
}

Conv2dGeometry Conv2d::geometry(std::size_t in_h, std::size_t in_w) const {
  Conv2dGeometry g;
  g.out_channels = weight.dim(0);
  g.in_channels = weight.dim(1);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = stride;
  g.padding = padding;
  g.in_h = in_h;
  g.in_w = in_w;
  return g;
}

Tensor Conv2d::forward(const Tensor& x, OpCounter* counter) const {
  if (counter) counter->on_conv(name, x, geometry(x.dim(2), x.dim(3)), spike_input);
  return conv2d(x, weight, stride, padding);
}

Linear Linear::make(std::string name, std::size_t in_features, std::size_t out_features,
                    std::mt19937_64& rng) {
  Linear lin;
  lin.name = std::move(name);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> w(out_features * in_features), b(out_features);
  for (auto& v : w) v = static_cast<float>(dist(rng));
  for (auto& v : b) v = static_cast<float>(dist(rng));
  lin.weight = Tensor({out_features, in_features}, std::move(w), true);
  lin.bias = Tensor({out_features}, std::move(b), true);
  return lin;
}

Tensor Linear::forward(const Tensor& x, OpCounter* counter) const {
  if (counter) counter->on_linear(name, x, weight.dim(0), spike_input);
  return linear(x, weight, bias);
}

Tensor Norm::forward(const Tensor& x, std::size_t timesteps, bool training) {
  Tensor seq = reshape(x, split_time(x.shape(), timesteps));
  return reshape(tebn_forward(seq, layer, training), x.shape());
}

Tensor Activation::forward(const Tensor& x, std::size_t timesteps) const {
  if (analog) return relu(x);
  Tensor seq = reshape(x, split_time(x.shape(), timesteps));
  neuron::NeuronLayerState<float> state;
  return reshape(neuron::plif_sequence(seq, state, params), x.shape());
}

}  // namespace snn::layers

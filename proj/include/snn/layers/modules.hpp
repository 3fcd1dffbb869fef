#pragma once

#include <random>
#include <string>
#include <vector>

#include "snn/layers/functional.hpp"
#include "snn/neuron/plif.hpp"
#include "snn/tensor/ops.hpp"

namespace snn::layers {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Observer for synaptic layers; the energy profiler implements it.
/// `spike_input` says whether the layer is fed by spike counts (accumulate
/// only) rather than analog values (multiply-accumulate).
class OpCounter {
 public:
  virtual ~OpCounter() = default;
  virtual void on_conv(const std::string& layer, const Tensor& input,
                       const Conv2dGeometry& geometry, bool spike_input) = 0;
  virtual void on_linear(const std::string& layer, const Tensor& input,
                         std::size_t out_features, bool spike_input) = 0;
};

/// Bias-free convolution over [N, C, H, W].
struct Conv2d {
  std::string name;
  Tensor weight;  // [Cout, Cin, K, K]
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool spike_input = false;

  static Conv2d make(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                     std::size_t stride, std::size_t padding, std::mt19937_64& rng);
  Conv2dGeometry geometry(std::size_t in_h, std::size_t in_w) const;
  Tensor forward(const Tensor& x, OpCounter* counter) const;
};

struct Linear {
  std::string name;
  Tensor weight;  // [M, N]
  Tensor bias;    // [M]
  bool spike_input = false;

  static Linear make(std::string name, std::size_t in_features, std::size_t out_features,
                     std::mt19937_64& rng);
  Tensor forward(const Tensor& x, OpCounter* counter) const;
};

/// Normalization over a time-merged activation [T*B, C, ...].
struct Norm {
  std::string name;
  TEBNLayer<float> layer;

  Tensor forward(const Tensor& x, std::size_t timesteps, bool training);
};

/// PLIF neuron layer over a time-merged activation [T*B, ...], or ReLU when
/// analog. Each call starts from V_reset.
struct Activation {
  std::string name;
  bool analog = false;
  neuron::PLIFParams<float> params;

  Tensor forward(const Tensor& x, std::size_t timesteps) const;
};

}  // namespace snn::layers

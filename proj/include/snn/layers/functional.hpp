#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "snn/tensor/tensor.hpp"

namespace snn::layers {

/// Invalid network or layer configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Batch normalization with statistics pooled over time, batch and space,
/// and an optional learnable per-timestep weight p[t] applied to both the
/// scale and the shift:  y[t] = gamma*p[t]*xhat + beta*p[t].
///
/// With `temporal` off p is fixed at 1 and the layer is ordinary BN sharing
/// its parameters across timesteps; it then accepts any number of steps.
template <typename T>
struct TEBNLayer {
  TensorT<T> gamma;  // [C]
  TensorT<T> beta;   // [C]
  TensorT<T> p;      // [T], only when temporal
  TensorT<T> running_mean;  // [C], no grad
  TensorT<T> running_var;   // [C], no grad
  double eps = 1e-5;
  double momentum = 0.1;
  bool temporal = true;

  static TEBNLayer make(std::size_t channels, std::size_t timesteps, bool temporal);
  std::size_t channels() const { return gamma.numel(); }
};

/// x_seq is [T, B, C, ...]. Training mode normalizes with the batch
/// statistics (biased variance) and folds them into the running averages
/// (unbiased variance); evaluation mode uses the running averages only.
template <typename T>
TensorT<T> tebn_forward(const TensorT<T>& x_seq, TEBNLayer<T>& layer, bool training);

enum class ConnectMode { add, iand };

/// Residual combination of block output `a` and block input `i`:
/// add -> a + i, iand -> (not a) and i.
template <typename T>
TensorT<T> sew_connect(const TensorT<T>& a, const TensorT<T>& i, ConnectMode mode);

/// Mean over the time axis: [T, ...] -> [...].
template <typename T>
TensorT<T> readout(const TensorT<T>& y_seq);

}  // namespace snn::layers

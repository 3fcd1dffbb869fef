#pragma once

#include <vector>

#include "snn/tensor/tensor.hpp"

namespace snn::neuron {

/// What fire() emits on the forward pass. `sigmoid` swaps the Heaviside
/// step for the surrogate itself, giving a fully smooth network whose
/// gradients can be checked against finite differences.
enum class SpikeForward { heaviside, sigmoid };

/// Parametric LIF neuron parameters. `a` is the learnable scalar shared by
/// every neuron of a layer, with 1/tau = sigmoid(a) so tau > 1 always.
/// Freezing `a` (requires_grad off) gives a plain LIF neuron.
template <typename T>
struct PLIFParams {
  TensorT<T> a = TensorT<T>::scalar(T(0), true);
  double v_threshold = 1.0;
  double v_reset = 0.0;
  double alpha = 4.0;
  // On: backward factor alpha*s*(1-s), the true derivative of the surrogate.
  // Off: s*(1-s) without the alpha factor.
  bool surrogate_alpha_scaling = true;
  SpikeForward spike_forward = SpikeForward::heaviside;

  static PLIFParams with_tau(double tau);
  double tau() const;
};

double sigmoid_of(double x);
/// a such that 1/sigmoid(a) == tau; requires tau > 1.
double a_for_tau(double tau);
double tau_for_a(double a);

/// 1 / (1 + exp(-alpha x)).
double surrogate_sigmoid(double x, double alpha);
/// alpha*s*(1-s) with s = surrogate_sigmoid(x, alpha), or s*(1-s) when
/// alpha_scaling is off.
double surrogate_sigmoid_grad(double x, double alpha, bool alpha_scaling = true);

template <typename T>
struct NeuronLayerState {
  TensorT<T> v;

  /// Every potential set to v_reset (no graph history).
  void reset(const Shape& shape, double v_reset) { v = TensorT<T>(shape, static_cast<T>(v_reset)); }
};

/// H = V_prev + sigmoid(a) * (X - (V_prev - V_reset)).
template <typename T>
TensorT<T> plif_charge(const TensorT<T>& v_prev, const TensorT<T>& x, const PLIFParams<T>& params);

/// S = Theta(H - V_th) forward, surrogate derivative backward.
template <typename T>
TensorT<T> fire(const TensorT<T>& h, const PLIFParams<T>& params);

/// V = H * (1 - S) + V_reset * S. S must be binary unless the params select
/// the smooth forward.
template <typename T>
TensorT<T> hard_reset(const TensorT<T>& h, const TensorT<T>& s, const PLIFParams<T>& params);

/// charge -> fire -> reset for every step of x_seq [T, ...]; returns the spike
/// train [T, ...]. An undefined state starts at V_reset; afterwards it holds
/// V[T-1].
template <typename T>
TensorT<T> plif_sequence(const TensorT<T>& x_seq, NeuronLayerState<T>& state,
                         const PLIFParams<T>& params);

/// Same, over an explicit list of steps. An empty list is a usage error.
template <typename T>
std::vector<TensorT<T>> plif_sequence(const std::vector<TensorT<T>>& steps,
                                      NeuronLayerState<T>& state, const PLIFParams<T>& params);

}  // namespace snn::neuron

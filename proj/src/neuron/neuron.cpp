#include <cmath>

#include "snn/neuron/plif.hpp"
#include "snn/tensor/ops.hpp"

namespace snn::neuron {

double sigmoid_of(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double a_for_tau(double tau) {
  if (!(tau > 1.0)) throw UsageError("PLIF tau must be > 1, got " + std::to_string(tau));
  const double k = 1.0 / tau;
  return std::log(k / (1.0 - k));
}

double tau_for_a(double a) { return 1.0 / sigmoid_of(a); }

double surrogate_sigmoid(double x, double alpha) { return 1.0 / (1.0 + std::exp(-alpha * x)); }

double surrogate_sigmoid_grad(double x, double alpha, bool alpha_scaling) {
  const double s = surrogate_sigmoid(x, alpha);
  const double g = s * (1.0 - s);
  return alpha_scaling ? alpha * g : g;
}

template <typename T>
PLIFParams<T> PLIFParams<T>::with_tau(double tau) {
  PLIFParams p;
  p.a = TensorT<T>::scalar(static_cast<T>(a_for_tau(tau)), true);
  return p;
}

template <typename T>
double PLIFParams<T>::tau() const {
  return tau_for_a(static_cast<double>(a.item()));
}

template <typename T>
TensorT<T> plif_charge(const TensorT<T>& v_prev, const TensorT<T>& x, const PLIFParams<T>& params) {
  if (v_prev.shape() != x.shape()) {
    throw ShapeError("plif_charge: potential " + shape_str(v_prev.shape()) + " vs input " +
                     shape_str(x.shape()));
  }
  if (params.a.numel() != 1) throw ShapeError("plif_charge: a must be a scalar");
  const T k = static_cast<T>(sigmoid_of(static_cast<double>(params.a.item())));
  const T v_reset = static_cast<T>(params.v_reset);
  const auto v = v_prev.data();
  const auto xv = x.data();
  std::vector<T> h(v.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = v[i] + k * (xv[i] - (v[i] - v_reset));
  return make_result<T>(x.shape(), std::move(h), {v_prev, x, params.a},
                        [k, v_reset](detail::Node<T>& self) {
                          auto& nv = *self.inputs[0];
                          auto& nx = *self.inputs[1];
                          auto& na = *self.inputs[2];
                          const auto& g = self.grad;
                          if (nv.requires_grad) {
                            auto& gv = nv.ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gv[i] += (T(1) - k) * g[i];
                          }
                          if (nx.requires_grad) {
                            auto& gx = nx.ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += k * g[i];
                          }
                          if (na.requires_grad) {
                            T acc = 0;
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              acc += g[i] * (nx.data[i] - nv.data[i] + v_reset);
                            }
                            na.ensure_grad()[0] += acc * k * (T(1) - k);
                          }
                        });
}

template <typename T>
TensorT<T> fire(const TensorT<T>& h, const PLIFParams<T>& params) {
  const double v_th = params.v_threshold;
  const double alpha = params.alpha;
  const bool scaling = params.surrogate_alpha_scaling;
  std::function<T(T)> forward;
  if (params.spike_forward == SpikeForward::heaviside) {
    forward = [v_th](T x) { return static_cast<double>(x) - v_th >= 0.0 ? T(1) : T(0); };
  } else {
    forward = [v_th, alpha](T x) {
      return static_cast<T>(surrogate_sigmoid(static_cast<double>(x) - v_th, alpha));
    };
  }
  std::function<T(T)> backward = [v_th, alpha, scaling](T x) {
    return static_cast<T>(surrogate_sigmoid_grad(static_cast<double>(x) - v_th, alpha, scaling));
  };
  return custom_grad_apply<T>(forward, backward, h);
}

template <typename T>
TensorT<T> hard_reset(const TensorT<T>& h, const TensorT<T>& s, const PLIFParams<T>& params) {
  if (h.shape() != s.shape()) {
    throw ShapeError("hard_reset: potential " + shape_str(h.shape()) + " vs spikes " +
                     shape_str(s.shape()));
  }
  if (params.spike_forward == SpikeForward::heaviside && !is_binary(s.data())) {
    throw DomainError("hard_reset: spike tensor must be binary");
  }
  const T v_reset = static_cast<T>(params.v_reset);
  const auto hv = h.data();
  const auto sv = s.data();
  std::vector<T> v(hv.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = hv[i] * (T(1) - sv[i]) + v_reset * sv[i];
  return make_result<T>(h.shape(), std::move(v), {h, s}, [v_reset](detail::Node<T>& self) {
    auto& nh = *self.inputs[0];
    auto& ns = *self.inputs[1];
    const auto& g = self.grad;
    if (nh.requires_grad) {
      auto& gh = nh.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gh[i] += g[i] * (T(1) - ns.data[i]);
    }
    if (ns.requires_grad) {
      auto& gs = ns.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gs[i] += g[i] * (v_reset - nh.data[i]);
    }
  });
}

template <typename T>
std::vector<TensorT<T>> plif_sequence(const std::vector<TensorT<T>>& steps,
                                      NeuronLayerState<T>& state, const PLIFParams<T>& params) {
  if (steps.empty()) throw UsageError("plif_sequence: need at least one timestep");
  if (!state.v.defined()) state.reset(steps.front().shape(), params.v_reset);
  if (state.v.shape() != steps.front().shape()) {
    throw ShapeError("plif_sequence: state " + shape_str(state.v.shape()) + " vs step " +
                     shape_str(steps.front().shape()));
  }
  std::vector<TensorT<T>> spikes;
  spikes.reserve(steps.size());
  for (const auto& x : steps) {
    TensorT<T> h = plif_charge(state.v, x, params);
    TensorT<T> s = fire(h, params);
    state.v = hard_reset(h, s, params);
    spikes.push_back(std::move(s));
  }
  return spikes;
}

template <typename T>
TensorT<T> plif_sequence(const TensorT<T>& x_seq, NeuronLayerState<T>& state,
                         const PLIFParams<T>& params) {
  if (x_seq.rank() < 2) {
    throw UsageError("plif_sequence: expected [T, ...] input, got " + shape_str(x_seq.shape()));
  }
  std::vector<TensorT<T>> steps;
  steps.reserve(x_seq.dim(0));
  for (std::size_t t = 0; t < x_seq.dim(0); ++t) steps.push_back(select(x_seq, t));
  return stack(plif_sequence(steps, state, params));
}

#define SNN_INSTANTIATE_NEURON(T)                                                                   \
  template struct PLIFParams<T>;                                                                    \
  template TensorT<T> plif_charge(const TensorT<T>&, const TensorT<T>&, const PLIFParams<T>&);     \
  template TensorT<T> fire(const TensorT<T>&, const PLIFParams<T>&);                                \
  template TensorT<T> hard_reset(const TensorT<T>&, const TensorT<T>&, const PLIFParams<T>&);      \
  template TensorT<T> plif_sequence(const TensorT<T>&, NeuronLayerState<T>&, const PLIFParams<T>&); \
  template std::vector<TensorT<T>> plif_sequence(const std::vector<TensorT<T>>&,                    \
                                                 NeuronLayerState<T>&, const PLIFParams<T>&);

SNN_INSTANTIATE_NEURON(float)
SNN_INSTANTIATE_NEURON(double)

}  // namespace snn::neuron

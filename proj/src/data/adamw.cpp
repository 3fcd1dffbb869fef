#include "snn/data/adamw.hpp"

#include <cmath>

namespace snn::data {
namespace {

template <typename T>
void step_impl(std::span<T> param, std::span<const T> grad, AdamState& st, const AdamWConfig& cfg) {
  if (param.size() != grad.size()) throw ShapeError("adamw_step: parameter and gradient sizes differ");
  if (st.m.empty()) {
    st.m.assign(param.size(), 0.0);
    st.v.assign(param.size(), 0.0);
  }
  if (st.m.size() != param.size() || st.v.size() != param.size()) throw ShapeError("adamw_step: state size mismatch");
  ++st.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  const double decay = 1.0 - cfg.lr * cfg.weight_decay;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g;
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    double p = static_cast<double>(param[i]);
    if (cfg.weight_decay != 0.0) p *= decay;
    p -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    param[i] = static_cast<T>(p);
  }
}

}  // namespace

void adamw_step(std::span<float> param, std::span<const float> grad, AdamState& state, const AdamWConfig& cfg) {
  step_impl(param, grad, state, cfg);
}

void adamw_step(std::span<double> param, std::span<const double> grad, AdamState& state, const AdamWConfig& cfg) {
  step_impl(param, grad, state, cfg);
}

AdamW::AdamW(std::vector<Tensor> params, AdamWConfig cfg)
    : params_(std::move(params)), cfg_(cfg), states_(params_.size()) {}

void AdamW::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adamw_step(params_[i].data(), params_[i].grad(), states_[i], cfg_);
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace snn::data

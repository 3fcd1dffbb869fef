#pragma once

#include <span>
#include <vector>

#include "snn/tensor/tensor.hpp"

namespace snn::data {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::size_t step = 0;
};

/// One update of a single parameter vector. Decay is decoupled: the
/// parameter shrinks by lr*wd*p before the adaptive step.
void adamw_step(std::span<float> param, std::span<const float> grad, AdamState& state, const AdamWConfig& cfg);
void adamw_step(std::span<double> param, std::span<const double> grad, AdamState& state, const AdamWConfig& cfg);

class AdamW {
 public:
  AdamW(std::vector<Tensor> params, AdamWConfig cfg);
  void step();
  void zero_grad();
  const AdamWConfig& config() const { return cfg_; }
  const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Tensor> params_;
  AdamWConfig cfg_;
  std::vector<AdamState> states_;
};

}  // namespace snn::data

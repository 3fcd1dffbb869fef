#pragma once

// Two spike-fed convolutions and a spike-fed linear head, plus a brute-force
// op counter that walks every spike and enumerates its synapses.

#include <random>
#include <vector>

#include "snn/layers/network.hpp"

namespace testutil {

class ToySNN final : public snn::layers::Model {
 public:
  ToySNN(std::size_t timesteps, std::size_t size, std::uint64_t seed) : T_(timesteps), size_(size) {
    std::mt19937_64 rng(seed);
    conv1_ = snn::layers::Conv2d::make("conv1", 2, 4, 3, 1, 1, rng);
    conv2_ = snn::layers::Conv2d::make("conv2", 4, 6, 3, 2, 1, rng);
    conv1_.spike_input = conv2_.spike_input = true;
    // Larger weights so spikes survive two layers.
    for (auto* c : {&conv1_, &conv2_})
      for (auto& w : c->weight.data()) w *= 4.0f;
    const std::size_t h2 = (size + 1) / 2;
    fc_ = snn::layers::Linear::make("fc", 6 * h2 * h2, 1, rng);
    fc_.spike_input = true;
    sn1_.name = "sn1";
    sn2_.name = "sn2";
  }

  snn::Tensor forward(const snn::Tensor& clips, const snn::layers::ForwardHooks& hooks = {}) override {
    const std::size_t B = clips.dim(1);
    auto x = snn::reshape(clips, {T_ * B, clips.dim(2), clips.dim(3), clips.dim(4)});
    inputs.clear();
    inputs.push_back(x);
    auto s1 = sn1_.forward(conv1_.forward(x, hooks.counter), T_);
    inputs.push_back(s1);
    auto s2 = sn2_.forward(conv2_.forward(s1, hooks.counter), T_);
    auto flat = snn::reshape(s2, {T_ * B, s2.numel() / (T_ * B)});
    inputs.push_back(flat);
    auto y = fc_.forward(flat, hooks.counter);
    return snn::layers::readout(snn::reshape(y, {T_, B}));
  }
  std::vector<snn::layers::NamedTensor> parameters() override {
    return {{"conv1", conv1_.weight}, {"conv2", conv2_.weight}, {"fc.w", fc_.weight}, {"fc.b", fc_.bias}};
  }
  std::vector<snn::layers::NamedTensor> state() override { return parameters(); }
  void set_training(bool on) override { training_ = on; }
  bool training() const override { return training_; }
  bool analog() const override { return false; }
  std::size_t timesteps() const override { return T_; }

  // Inputs of conv1, conv2 and fc from the last forward.
  std::vector<snn::Tensor> inputs;

  // Walks every spike of the last forward and counts the synapses it drives.
  std::uint64_t brute_force_acs() const {
    std::uint64_t acs = 0;
    acs += brute_conv(inputs[0], conv1_);
    acs += brute_conv(inputs[1], conv2_);
    for (float v : inputs[2].data()) acs += static_cast<std::uint64_t>(v) * fc_.weight.dim(0);
    return acs;
  }

 private:
  static std::uint64_t brute_conv(const snn::Tensor& x, const snn::layers::Conv2d& c) {
    const long H = static_cast<long>(x.dim(2)), W = static_cast<long>(x.dim(3));
    const long K = static_cast<long>(c.weight.dim(2)), S = static_cast<long>(c.stride),
               P = static_cast<long>(c.padding);
    const long Ho = (H + 2 * P - K) / S + 1, Wo = (W + 2 * P - K) / S + 1;
    const std::uint64_t cout = c.weight.dim(0);
    std::uint64_t acs = 0;
    const std::size_t plane = static_cast<std::size_t>(H * W);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      const auto spikes = static_cast<std::uint64_t>(x[i]);
      if (spikes == 0) continue;
      const long y = static_cast<long>((i % plane) / W), xx = static_cast<long>(i % W);
      for (long oy = 0; oy < Ho; ++oy)
        for (long ox = 0; ox < Wo; ++ox)
          for (long ky = 0; ky < K; ++ky)
            for (long kx = 0; kx < K; ++kx)
              if (oy * S + ky - P == y && ox * S + kx - P == xx) acs += spikes * cout;
    }
    return acs;
  }

  std::size_t T_, size_;
  bool training_ = false;
  snn::layers::Conv2d conv1_, conv2_;
  snn::layers::Linear fc_;
  snn::layers::Activation sn1_, sn2_;
};

}  // namespace testutil

#pragma once

#include <random>
#include <vector>

#include "snn/layers/functional.hpp"
#include "snn/neuron/plif.hpp"
#include "snn/tensor/ops.hpp"

namespace testutil {

/// Two-layer spiking residual net in f64 with the sigmoid forward, so the
/// whole unrolled graph is differentiable. Layout mirrors a network block:
/// conv -> TEBN -> PLIF, conv -> TEBN -> PLIF, ADD, pool, linear, readout.
struct SmoothNet {
  static constexpr std::size_t T = 3, B = 2, C = 2, F = 3, H = 5, W = 5;
  snn::TensorD w1, w2, fc_w, fc_b;
  snn::layers::TEBNLayer<double> bn1, bn2;
  snn::neuron::PLIFParams<double> sn1, sn2;
  snn::TensorD input;
  std::vector<double> target;

  explicit SmoothNet(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.5);
    auto rnd = [&](snn::Shape s) {
      std::vector<double> v(snn::shape_numel(s));
      for (auto& x : v) x = n(rng);
      return snn::TensorD(std::move(s), std::move(v), true);
    };
    w1 = rnd({F, C, 3, 3});
    w2 = rnd({F, F, 3, 3});
    fc_w = rnd({1, F});
    fc_b = rnd({1});
    bn1 = snn::layers::TEBNLayer<double>::make(F, T, true);
    bn2 = snn::layers::TEBNLayer<double>::make(F, T, true);
    // Move the affine terms off their defaults so every path is exercised.
    for (auto* l : {&bn1, &bn2}) {
      for (auto& g : l->gamma.data()) g = 1.0 + n(rng) * 0.3;
      for (auto& b : l->beta.data()) b = 0.5 + n(rng) * 0.3;
      for (auto& q : l->p.data()) q = 1.0 + n(rng) * 0.2;
    }
    sn1 = snn::neuron::PLIFParams<double>::with_tau(2.0);
    sn2 = snn::neuron::PLIFParams<double>::with_tau(3.0);
    for (auto* s : {&sn1, &sn2}) s->spike_forward = snn::neuron::SpikeForward::sigmoid;
    input = rnd({T, B, C, H, W});
    input.set_requires_grad(false);
    target = {1.0, 0.0};
  }

  std::vector<snn::TensorD> params() {
    return {w1, w2, fc_w, fc_b, bn1.gamma, bn1.beta, bn1.p, bn2.gamma, bn2.beta, bn2.p, sn1.a, sn2.a};
  }

  snn::TensorD loss() {
    using namespace snn;
    auto unit = [&](const TensorD& x_merged, const TensorD& w, layers::TEBNLayer<double>& bn,
                    const neuron::PLIFParams<double>& sn) {
      TensorD y = conv2d(x_merged, w, 1, 1);
      y = layers::tebn_forward(reshape(y, {T, B, F, H, W}), bn, true);
      neuron::NeuronLayerState<double> st;
      return neuron::plif_sequence(y, st, sn);
    };
    TensorD x = reshape(input, {T * B, C, H, W});
    TensorD s1 = unit(x, w1, bn1, sn1);
    TensorD s2 = unit(reshape(s1, {T * B, F, H, W}), w2, bn2, sn2);
    TensorD r = layers::sew_connect(s2, s1, layers::ConnectMode::add);
    TensorD pooled = global_avg_pool(reshape(r, {T * B, F, H, W}));
    TensorD logits = layers::readout(reshape(linear(pooled, fc_w, fc_b), {T, B, 1}));
    TensorD diff = sub(reshape(logits, {B}), TensorD({B}, target));
    return sum(mul(diff, diff));
  }
};

}  // namespace testutil

#include <doctest.h>

#include <cmath>
#include <random>

#include "grad_check.hpp"
#include "snn/neuron/plif.hpp"
#include "snn/tensor/ops.hpp"

using namespace snn;
using namespace snn::neuron;

namespace {

PLIFParams<double> params_tau(double tau) { return PLIFParams<double>::with_tau(tau); }

}  // namespace

TEST_CASE("tau and a are inverse maps with tau > 1") {
  for (double tau : {1.01, 1.5, 2.0, 7.0, 100.0}) CHECK(tau_for_a(a_for_tau(tau)) == doctest::Approx(tau));
  CHECK(a_for_tau(2.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(a_for_tau(1.0), UsageError);
  CHECK(tau_for_a(-50.0) > 1.0);
  PLIFParams<float> p;
  CHECK(p.tau() == doctest::Approx(2.0));
  CHECK(p.v_threshold == 1.0);
  CHECK(p.v_reset == 0.0);
  CHECK(p.alpha == 4.0);
}

TEST_CASE("charge moves V a fraction 1/tau toward X + V_reset") {
  auto p = params_tau(4.0);
  p.v_reset = -0.5;
  TensorD v({2}, std::vector<double>{0.2, -0.1});
  TensorD x({2}, std::vector<double>{0.4, 1.0});
  TensorD h = plif_charge(v, x, p);
  CHECK(h[0] == doctest::Approx(0.2 + 0.25 * (0.4 - (0.2 + 0.5))));
  CHECK(h[1] == doctest::Approx(-0.1 + 0.25 * (1.0 - (-0.1 + 0.5))));
  CHECK_THROWS_AS(plif_charge(v, TensorD({3}, 0.0), p), ShapeError);
}

TEST_CASE("fire is a step at the threshold, inclusive") {
  PLIFParams<double> p;
  TensorD h({4}, std::vector<double>{0.999, 1.0, 1.2, -3.0});
  TensorD s = fire(h, p);
  CHECK(s[0] == 0.0);
  CHECK(s[1] == 1.0);
  CHECK(s[2] == 1.0);
  CHECK(s[3] == 0.0);
}

TEST_CASE("surrogate derivative is alpha*sigma*(1-sigma), or without alpha when scaling is off") {
  for (double x : {-2.0, -0.3, 0.0, 0.1, 1.7}) {
    const double s = 1.0 / (1.0 + std::exp(-4.0 * x));
    CHECK(surrogate_sigmoid_grad(x, 4.0) == doctest::Approx(4.0 * s * (1 - s)).epsilon(1e-12));
    CHECK(surrogate_sigmoid_grad(x, 4.0, false) == doctest::Approx(s * (1 - s)).epsilon(1e-12));
    // Analytic derivative of the surrogate by central difference.
    const double h = 1e-6;
    const double fd = (surrogate_sigmoid(x + h, 4.0) - surrogate_sigmoid(x - h, 4.0)) / (2 * h);
    CHECK(surrogate_sigmoid_grad(x, 4.0) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("fire backward applies the surrogate at H - V_th") {
  PLIFParams<double> p;
  p.v_threshold = 0.5;
  TensorD h({3}, std::vector<double>{0.0, 0.5, 1.25}, true);
  sum(fire(h, p)).backward();
  for (std::size_t i = 0; i < 3; ++i) CHECK(h.grad()[i] == doctest::Approx(surrogate_sigmoid_grad(h[i] - 0.5, 4.0)));
}

TEST_CASE("hard reset sends firing neurons to V_reset") {
  PLIFParams<double> p;
  p.v_reset = -0.2;
  TensorD h({3}, std::vector<double>{0.3, 1.4, 0.9});
  TensorD s({3}, std::vector<double>{0, 1, 0});
  TensorD v = hard_reset(h, s, p);
  CHECK(v[0] == 0.3);
  CHECK(v[1] == -0.2);
  CHECK(v[2] == 0.9);
  CHECK_THROWS_AS(hard_reset(h, TensorD({3}, 0.5), p), DomainError);
}

TEST_CASE("sub-threshold trajectory follows the geometric closed form") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> tau_d(1.2, 10.0), u(-0.5, 0.8);
  for (int trial = 0; trial < 20; ++trial) {
    const double tau = tau_d(rng), x = u(rng), v0 = u(rng);
    auto p = params_tau(tau);
    NeuronLayerState<double> st;
    st.v = TensorD({1}, v0);
    for (int t = 1; t <= 32; ++t) {
      auto s = plif_sequence(std::vector<TensorD>{TensorD({1}, x)}, st, p);
      CHECK(s[0][0] == 0.0);
      const double expect = (v0 - x - p.v_reset) * std::pow(1 - 1 / tau, t) + x + p.v_reset;
      CHECK(st.v[0] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("sequence state carries over between calls") {
  auto p = params_tau(3.0);
  TensorD x({6, 2}, std::vector<double>{0.5, 2.0, 0.7, 0.1, 1.2, 3.0, 0.0, 0.4, 0.9, 0.9, 2.5, 0.2});
  NeuronLayerState<double> whole;
  TensorD all = plif_sequence(x, whole, p);
  NeuronLayerState<double> pieces;
  TensorD first = plif_sequence(TensorD({3, 2}, std::vector<double>(x.data().begin(), x.data().begin() + 6)), pieces, p);
  TensorD second = plif_sequence(TensorD({3, 2}, std::vector<double>(x.data().begin() + 6, x.data().end())), pieces, p);
  for (std::size_t i = 0; i < 6; ++i) CHECK(all[i] == first[i]);
  for (std::size_t i = 0; i < 6; ++i) CHECK(all[6 + i] == second[i]);
  CHECK(whole.v[0] == pieces.v[0]);
  CHECK(whole.v[1] == pieces.v[1]);
}

TEST_CASE("sequence errors") {
  PLIFParams<double> p;
  NeuronLayerState<double> st;
  CHECK_THROWS_AS(plif_sequence(std::vector<TensorD>{}, st, p), UsageError);
  st.v = TensorD({3}, 0.0);
  CHECK_THROWS_AS(plif_sequence(TensorD({2, 4}, 0.0), st, p), ShapeError);
}

TEST_CASE("BPTT through a smooth neuron matches finite differences") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-0.5, 2.0);
  auto p = params_tau(2.5);
  p.spike_forward = SpikeForward::sigmoid;
  std::vector<double> xv(8 * 3);
  for (auto& v : xv) v = u(rng);
  TensorD x({8, 3}, xv, true);
  TensorD w({8, 1}, std::vector<double>{0.3, -0.7, 1.1, 0.5, 0.9, -0.2, 1.4, 0.8}, true);
  auto loss = [&] {
    NeuronLayerState<double> st;
    TensorD s = plif_sequence(mul(x, w), st, p);
    return sum(mul(s, s));
  };
  CHECK(testutil::max_grad_rel_error({x, w, p.a}, loss) < 1e-5);
}

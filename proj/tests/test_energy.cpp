#include <doctest.h>

#include <cmath>
#include <random>

#include "snn/energy/profiler.hpp"
#include "toy_snn.hpp"

using namespace snn;
using namespace snn::energy;

namespace {

Tensor random_binary(Shape shape, std::mt19937_64& rng, double p) {
  std::bernoulli_distribution b(p);
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = b(rng) ? 1.0f : 0.0f;
  return Tensor(std::move(shape), std::move(v));
}

Conv2dGeometry geom(std::size_t cin, std::size_t cout, std::size_t k, std::size_t stride, std::size_t pad,
                    std::size_t h, std::size_t w) {
  Conv2dGeometry g;
  g.in_channels = cin;
  g.out_channels = cout;
  g.kernel_h = g.kernel_w = k;
  g.stride = stride;
  g.padding = pad;
  g.in_h = h;
  g.in_w = w;
  return g;
}

layers::NetworkConfig small_net(bool analog) {
  auto cfg = layers::NetworkConfig::mini();
  cfg.analog_mode = analog;
  cfg.input_h = cfg.input_w = 32;
  cfg.timesteps = 3;
  return cfg;
}

}  // namespace

TEST_CASE("MAC counts for a conv and a linear layer") {
  CHECK(conv_macs(geom(1, 1, 3, 1, 0, 6, 6)) == 144);
  CHECK(linear_macs(5, 3) == 15);

  OpProfiler prof;
  prof.on_conv("c", Tensor({1, 1, 6, 6}, 0.5f), geom(1, 1, 3, 1, 0, 6, 6), false);
  prof.on_linear("l", Tensor({1, 5}, 0.5f), 3, false);
  REQUIRE(prof.layers().size() == 2);
  CHECK(prof.layers()[0].macs == 144);
  CHECK(prof.layers()[1].macs == 15);
  CHECK(prof.layers()[1].acs == 0);
  // Analog layers are counted per frame in the batch.
  prof.on_conv("c", Tensor({2, 1, 6, 6}, 0.5f), geom(1, 1, 3, 1, 0, 6, 6), false);
  CHECK(prof.layers()[0].macs == 144 * 3);
}

TEST_CASE("spike-fed linear: 5 spikes into width 10 cost 50 ACs") {
  OpProfiler prof;
  Tensor x({1, 8}, std::vector<float>{1, 0, 1, 1, 0, 0, 1, 1});
  prof.on_linear("fc", x, 10, true);
  CHECK(prof.layers()[0].acs == 50);
  CHECK(prof.layers()[0].macs == 0);
  Tensor counts({1, 2}, std::vector<float>{2, 3});
  prof.on_linear("fc", counts, 10, true);
  CHECK(prof.layers()[0].acs == 100);
  CHECK_THROWS_AS(prof.on_linear("fc", Tensor({1, 1}, 0.5f), 10, true), DomainError);
  CHECK_THROWS_AS(prof.on_linear("fc", Tensor({1, 1}, -1.0f), 10, true), DomainError);
}

TEST_CASE("per-position conv fanout equals brute-force enumeration") {
  for (auto [k, s, p, h] : {std::tuple{3u, 1u, 1u, 7u}, {3u, 2u, 1u, 8u}, {7u, 2u, 3u, 13u}, {1u, 2u, 0u, 5u}}) {
    const auto g = geom(2, 5, k, s, p, h, h);
    const long Ho = static_cast<long>(g.out_h());
    std::uint64_t total = 0;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < h; ++x) {
        std::uint64_t brute = 0;
        for (long oy = 0; oy < Ho; ++oy)
          for (long ox = 0; ox < Ho; ++ox)
            for (long ky = 0; ky < static_cast<long>(k); ++ky)
              for (long kx = 0; kx < static_cast<long>(k); ++kx)
                if (oy * static_cast<long>(s) + ky - static_cast<long>(p) == static_cast<long>(y) &&
                    ox * static_cast<long>(s) + kx - static_cast<long>(p) == static_cast<long>(x))
                  brute += 5;
        CHECK(conv_position_fanout(g, y, x) == brute);
        total += brute;
      }
    // Every MAC reads a real input or a padding zero.
    if (p == 0) CHECK(total * g.in_channels == conv_macs(g));
    else CHECK(total * g.in_channels < conv_macs(g));
  }
  // Interior fanout of a stride-1 3x3 conv is K*K*Cout.
  CHECK(conv_position_fanout(geom(1, 4, 3, 1, 1, 9, 9), 4, 4) == 36);
  CHECK(conv_position_fanout(geom(1, 4, 3, 1, 1, 9, 9), 0, 0) == 16);
}

TEST_CASE("energy_estimate reproduces every Table V cell") {
  struct Row {
    double macs_g, acs_g, published_mj, tolerance;
  };
  const Row rows[] = {
      {36.16, 0.0, 166.33, 0.005},   // PT ResNet18, 9 frames
      {109.94, 0.0, 505.73, 0.005},  // SlowFast R50, 9 frames
      {6.52, 22.75, 50.45, 0.01},    // SPS R18T, 9 frames
      {120.53, 0.0, 554.42, 0.005},  // PT ResNet18, 30 frames
      {363.65, 0.0, 1672.8, 0.005},  // SlowFast R50, 30 frames
      {6.13, 4.63, 32.37, 0.01},     // SPS R18T, 30 frames
  };
  for (const auto& r : rows) {
    const double mj = energy_estimate(static_cast<std::uint64_t>(std::llround(r.macs_g * 1e9)),
                                      static_cast<std::uint64_t>(std::llround(r.acs_g * 1e9)));
    CHECK(std::fabs(mj - r.published_mj) / r.published_mj < r.tolerance);
  }
  CHECK(energy_estimate(36'160'000'000ULL, 0) == doctest::Approx(166.336));
  CHECK(energy_estimate(6'520'000'000ULL, 22'750'000'000ULL) == doctest::Approx(50.467));
  CHECK(energy_estimate(0, 0) == 0.0);
  EnergyModel custom{1.0, 2.0};
  CHECK(energy_estimate(1'000'000'000ULL, 1'000'000'000ULL, custom) == doctest::Approx(3.0));
  CHECK_THROWS_AS((EnergyModel{0.0, 1.0}.validate()), UsageError);
}

TEST_CASE("toy SNN AC totals equal a per-spike brute-force walk") {
  testutil::ToySNN toy(4, 16, 41);
  std::mt19937_64 rng(42);
  std::uint64_t seen = 0;
  for (int i = 0; i < 10; ++i) {
    auto clip = random_binary({4, 1, 2, 16, 16}, rng, 0.3);
    auto rep = count_ops_snn(toy, std::vector<Tensor>{clip});
    CHECK(rep.total_acs == toy.brute_force_acs());
    CHECK(rep.total_macs == 0);
    seen += rep.layers[1].acs;
  }
  CHECK(seen > 0);  // spikes did reach the second layer
}

TEST_CASE("analog counts scale with T and ignore the input") {
  layers::Network net(small_net(true));
  auto a = count_ops_analog(net, {3, 1, 2, 32, 32});
  auto b = count_ops_analog(net, {6, 2, 2, 32, 32});
  CHECK(a.total_acs == 0);
  CHECK(b.total_macs == 2 * a.total_macs);
  CHECK(a.samples_averaged == 1);
  CHECK(b.samples_averaged == 2);

  // Same count from a real forward on random input.
  std::mt19937_64 rng(43);
  OpProfiler prof;
  net.set_training(false);
  net.forward(random_binary({3, 1, 2, 32, 32}, rng, 0.5), {&prof, nullptr});
  std::uint64_t macs = 0;
  for (const auto& l : prof.layers()) macs += l.macs;
  CHECK(macs == a.total_macs);

  // Stem conv by hand: 7x7 stride 2, 2 -> 16 channels, 16x16 output, three frames.
  CHECK(a.layers.front().macs == 3ULL * 7 * 7 * 2 * 16 * 16 * 16);

  layers::Network spiking(small_net(false));
  CHECK_THROWS_AS(count_ops_analog(spiking, {3, 1, 2, 32, 32}), UsageError);
  CHECK_THROWS_AS(count_ops_snn(net, std::vector<Tensor>{Tensor({3, 1, 2, 32, 32}, 0.0f)}), UsageError);
  CHECK_THROWS_AS(count_ops_snn(spiking, std::vector<Tensor>{}), UsageError);
}

TEST_CASE("a silent input costs no ACs; the stem is still MACs") {
  layers::Network net(small_net(false));
  auto rep = count_ops_snn(net, std::vector<Tensor>{Tensor({3, 1, 2, 32, 32}, 0.0f)});
  CHECK(rep.total_acs == 0);
  CHECK(rep.layers.front().macs == 3ULL * 7 * 7 * 2 * 16 * 16 * 16);
  CHECK(rep.energy_mj == doctest::Approx(energy_estimate(rep.total_macs, 0)));
}

TEST_CASE("more input spikes never lower the first spike-fed layer's ACs") {
  testutil::ToySNN toy(4, 12, 44);
  std::mt19937_64 rng(45);
  std::bernoulli_distribution add(0.2);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_binary({4, 1, 2, 12, 12}, rng, 0.2);
    auto before = count_ops_snn(toy, std::vector<Tensor>{x}).layers.front().acs;
    for (auto& v : x.data())
      if (add(rng)) v = 1.0f;
    CHECK(count_ops_snn(toy, std::vector<Tensor>{x}).layers.front().acs >= before);
  }
}

TEST_CASE("report averages over samples and survives the key-value format") {
  testutil::ToySNN toy(4, 12, 46);
  std::mt19937_64 rng(47);
  std::vector<Tensor> clips{random_binary({4, 1, 2, 12, 12}, rng, 0.3), random_binary({4, 1, 2, 12, 12}, rng, 0.3)};
  auto r0 = count_ops_snn(toy, std::vector<Tensor>{clips[0]});
  auto r1 = count_ops_snn(toy, std::vector<Tensor>{clips[1]});
  auto both = count_ops_snn(toy, clips);
  CHECK(both.samples_averaged == 2);
  CHECK(both.total_acs == (r0.total_acs + r1.total_acs + 1) / 2);

  auto back = EnergyReport::from_kv(both.to_kv());
  CHECK(back.total_acs == both.total_acs);
  CHECK(back.layers.size() == both.layers.size());
  CHECK(back.layers[1].name == both.layers[1].name);
  CHECK(back.energy_mj == doctest::Approx(both.energy_mj));
  CHECK(both.to_text().find("energy_mj") != std::string::npos);
}

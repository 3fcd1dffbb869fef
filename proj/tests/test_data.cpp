#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "snn/data/adamw.hpp"
#include "snn/data/clips.hpp"
#include "snn/data/dataset_io.hpp"
#include "snn/data/dvs_encode.hpp"
#include "snn/data/kv_config.hpp"
#include "snn/data/loss.hpp"
#include "snn/data/metrics.hpp"
#include "snn/data/scene.hpp"
#include "snn/data/train.hpp"
#include "snn/dvs/frames.hpp"

using namespace snn;
using namespace snn::data;

namespace {

// A label-only video with 1x1 frames.
Video label_video(std::size_t n, bool crossing = false, std::size_t first = 0, std::size_t len = 0) {
  Video v;
  v.frames.assign(n, dvs::Image(1, 1, 1));
  v.labels.assign(n, 0);
  v.crossing = crossing;
  v.first_crossing = first;
  for (std::size_t k = first; crossing && k < first + len && k < n; ++k) v.labels[k] = 1;
  return v;
}

// Pairwise definition: wins + ties/2 over all positive-negative pairs.
double mann_whitney(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) {
        ++pairs;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return wins / static_cast<double>(pairs);
}

double plain_bce(double z, double y) {
  const double p = 1.0 / (1.0 + std::exp(-z));
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("snn_data_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("window counts for the 900-frame videos") {
  std::vector<std::uint8_t> labels(900, 0);
  CHECK(window_clips(labels, 9, 8).size() == 892);
  CHECK(window_clips(labels, 30, 29).size() == 871);
  for (const auto& c : window_clips(labels, 9, 8)) CHECK(c.label == 0);
  auto strided = window_clips(labels, 9, 5, 3);
  CHECK(strided.size() == (900 - 9) / 4 + 1);
  CHECK(strided[1].start == 4);
  CHECK(strided[0].video == 3);
  CHECK(window_clips(std::vector<std::uint8_t>(5, 0), 9, 8).empty());
}

TEST_CASE("detection label is an OR over the window") {
  std::vector<std::uint8_t> l{0, 0, 1, 0};
  CHECK(label_detection(l, 0, 4) == 1);
  CHECK(label_detection(l, 3, 1) == 0);
  CHECK(label_detection(std::vector<std::uint8_t>(4, 1), 0, 4) == 1);
  CHECK(label_detection(std::vector<std::uint8_t>(4, 0), 0, 4) == 0);

  std::vector<Video> vids{label_video(20, true, 10, 3)};
  std::vector<std::size_t> which{0};
  auto clips = detection_clips(vids, which, 4, 3);
  CHECK(clips.size() == 17);
  for (const auto& c : clips) CHECK(c.label == (c.start + 3 >= 10 && c.start <= 12 ? 1 : 0));
}

TEST_CASE("prediction positives come from the horizon before the first crossing") {
  std::vector<Video> vids{label_video(900, true, 300, 16)};
  for (int i = 0; i < 3; ++i) vids.push_back(label_video(900));
  std::vector<std::size_t> which{0, 1, 2, 3};
  auto clips = label_prediction(vids, which, 30, 9, 8, 7);
  std::size_t pos = 0, neg = 0;
  for (const auto& c : clips) {
    if (c.label) {
      ++pos;
      CHECK(c.video == 0);
      CHECK(c.start >= 270);
      CHECK(c.start <= 291);
    } else {
      ++neg;
      CHECK(c.video != 0);
    }
  }
  CHECK(pos == 22);
  CHECK(neg == 22);

  // Truncated region when the crossing comes before the horizon.
  std::vector<Video> early{label_video(200, true, 20, 16), label_video(200)};
  std::vector<std::size_t> both{0, 1};
  auto tr = label_prediction(early, both, 150, 9, 8, 1);
  CHECK(std::count_if(tr.begin(), tr.end(), [](const ClipRef& c) { return c.label == 1; }) == 12);

  // No crossing videos at all.
  std::vector<std::size_t> none{1};
  CHECK_THROWS_AS(label_prediction(early, none, 30, 9, 8, 1), UsageError);
}

TEST_CASE("prediction sampling is balanced for every horizon") {
  std::mt19937_64 rng(51);
  std::vector<Video> vids;
  for (int i = 0; i < 6; ++i) vids.push_back(label_video(120, true, 20 + 15 * i, 10));
  for (int i = 0; i < 2; ++i) vids.push_back(label_video(60));
  std::vector<std::size_t> which(vids.size());
  std::iota(which.begin(), which.end(), 0);
  for (std::size_t h : {9, 15, 30, 60, 100, 150}) {
    auto c = label_prediction(vids, which, h, 9, 8, h);
    const auto p = std::count_if(c.begin(), c.end(), [](const ClipRef& r) { return r.label == 1; });
    CHECK(static_cast<std::size_t>(2 * p) == c.size());
    CHECK(p > 0);
  }
}

TEST_CASE("weighted BCE values") {
  const std::vector<float> one{1.0f}, zero{0.0f};
  CHECK(weighted_bce(Tensor({1}, 0.0f), one, 2.0)[0] == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(weighted_bce(Tensor({1}, 0.0f), one, 2.0)[0] == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(weighted_bce(Tensor({1}, 0.0f), zero, 7.0)[0] == doctest::Approx(0.6931).epsilon(1e-4));

  std::mt19937_64 rng(52);
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<float> z(64), y(64);
  double expect = 0;
  for (std::size_t i = 0; i < 64; ++i) {
    z[i] = static_cast<float>(n(rng));
    y[i] = static_cast<float>(i % 3 == 0);
    expect += plain_bce(z[i], y[i]);
  }
  CHECK(weighted_bce(Tensor({64}, z), y, 1.0)[0] == doctest::Approx(expect / 64).epsilon(1e-6));

  // Large logits stay finite.
  const std::vector<float> big{100.0f, -100.0f};
  auto l = weighted_bce(Tensor({2}, big), std::vector<float>{0.0f, 1.0f}, 1.0);
  CHECK(l[0] == doctest::Approx(100.0).epsilon(1e-6));

  CHECK_THROWS_AS(weighted_bce(Tensor({1}, std::numeric_limits<float>::quiet_NaN()), one, 1.0), DomainError);
  CHECK_THROWS_AS(weighted_bce(Tensor({1}, 0.0f), one, 0.0), UsageError);
}

TEST_CASE("weighted BCE gradient matches the closed form") {
  std::vector<float> z{-1.5f, 0.3f, 2.0f}, y{1, 0, 1};
  Tensor logits({3}, z, true);
  weighted_bce(logits, y, 3.0).backward();
  for (std::size_t i = 0; i < 3; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-z[i]));
    const double g = (3.0 * y[i] * (p - 1.0) + (1.0 - y[i]) * p) / 3.0;
    CHECK(logits.grad()[i] == doctest::Approx(g).epsilon(1e-6));
  }
}

TEST_CASE("positive weight is the negative-to-positive ratio") {
  std::vector<std::uint8_t> l(892, 0);
  l[17] = 1;
  CHECK(ratio_pos_weight(l) == 891.0);
  CHECK(ratio_pos_weight(std::vector<std::uint8_t>{1, 0, 0, 1}) == 1.0);
  CHECK_THROWS_AS(ratio_pos_weight(std::vector<std::uint8_t>{0, 0}), UsageError);
}

TEST_CASE("AdamW steps") {
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  std::vector<double> w{1.0, -2.0};
  AdamState st;
  adamw_step(std::span<double>(w), std::span<const double>(std::vector<double>{0.0, 0.0}), st, cfg);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -2.0);

  std::vector<double> x{1.0};
  AdamState sx;
  adamw_step(std::span<double>(x), std::span<const double>(std::vector<double>{1.0}), sx, AdamWConfig{});
  CHECK(x[0] < 1.0);
  // First step: decay then a step of exactly lr.
  CHECK(x[0] == doctest::Approx(1.0 * (1 - 1e-4) - 1e-3).epsilon(1e-9));

  // 2-d quadratic 0.5*(4 a^2 + b^2) with minimum at (1, -3).
  AdamWConfig q;
  q.lr = 0.05;
  q.weight_decay = 0.0;
  std::vector<double> p{-2.0, 2.0};
  AdamState sq;
  for (int i = 0; i < 2000; ++i) {
    std::vector<double> g{4.0 * (p[0] - 1.0), p[1] + 3.0};
    adamw_step(std::span<double>(p), std::span<const double>(g), sq, q);
  }
  CHECK(std::fabs(p[0] - 1.0) < 1e-3);
  CHECK(std::fabs(p[1] + 3.0) < 1e-3);
}

TEST_CASE("AdamW without decay follows the Adam trajectory exactly") {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n;
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  cfg.lr = 0.01;
  std::vector<double> w(5), ref(5), m(5, 0.0), v(5, 0.0);
  for (std::size_t i = 0; i < 5; ++i) w[i] = ref[i] = n(rng);
  AdamState st;
  for (int t = 1; t <= 50; ++t) {
    std::vector<double> g(5);
    for (auto& x : g) x = n(rng);
    adamw_step(std::span<double>(w), std::span<const double>(g), st, cfg);
    for (std::size_t i = 0; i < 5; ++i) {
      m[i] = 0.9 * m[i] + (1 - 0.9) * g[i];
      v[i] = 0.999 * v[i] + (1 - 0.999) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    CHECK(w == ref);
    CHECK(st.m == m);
    CHECK(st.v == v);
  }
}

TEST_CASE("AdamW class updates tensors in place") {
  Tensor p({2}, std::vector<float>{1.0f, 1.0f}, true);
  AdamW opt({p}, AdamWConfig{});
  sum(mul(p, p)).backward();
  opt.step();
  CHECK(p[0] < 1.0f);
  opt.zero_grad();
  CHECK(p.grad()[0] == 0.0f);
  CHECK(opt.states()[0].step == 1);
}

TEST_CASE("AUROC examples and the pairwise definition") {
  CHECK(auroc(std::vector<double>{0.2, 0.8}, std::vector<int>{0, 1}) == 1.0);
  CHECK(auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 1, 1, 0}) == 0.5);
  CHECK(auroc(std::vector<double>{0.3, 0.3, 0.3}, std::vector<int>{0, 1, 1}) == 0.5);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
  CHECK_THROWS_AS(auroc(std::vector<double>{0.1}, std::vector<int>{1, 0}), MetricError);

  std::mt19937_64 rng(54);
  std::uniform_int_distribution<int> len(2, 12), level(0, 4), bit(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    std::vector<int> y(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = level(rng) * 0.25;  // coarse levels force ties
      y[i] = bit(rng);
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auroc(s, y);
    CHECK(a == mann_whitney(s, y));
    // Rank statistic: any strictly increasing transform leaves it unchanged.
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3 * s[i]) - 7;
    CHECK(auroc(t, y) == a);
  }
}

TEST_CASE("F-score cases") {
  CHECK(f_score_counts(1, 1, 1) == 50.0);
  CHECK(f_score_counts(0, 3, 2) == 0.0);
  CHECK(f_score_counts(4, 0, 0) == 100.0);
  CHECK(f_score(std::vector<double>{0.9, 0.1, 0.7}, std::vector<int>{1, 0, 1}) == 100.0);
  CHECK(f_score(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 0}) == 0.0);
  // 0.5 itself predicts positive.
  CHECK(f_score(std::vector<double>{0.5, 0.6, 0.2}, std::vector<int>{1, 0, 1}) == doctest::Approx(50.0));
}

TEST_CASE("early stopping counts epochs without strict improvement") {
  EarlyStopping es(8);
  int epochs = 0;
  for (double v = 1.0; epochs < 100; v -= 0.001) {
    ++epochs;
    if (es.update(v)) break;
  }
  CHECK(epochs == 100);

  EarlyStopping frozen(8);
  CHECK_FALSE(frozen.update(0.5));
  int extra = 0;
  while (!frozen.update(0.5)) ++extra;
  CHECK(extra + 1 == 8);
  CHECK(frozen.stale_epochs() == 8);
}

TEST_CASE("scene generation is deterministic and labels match the overlap count") {
  SceneConfig cfg;
  cfg.frames = 120;
  cfg.crossing_probability = 1.0;
  auto a = gen_synthetic_scene(cfg, 99);
  auto b = gen_synthetic_scene(cfg, 99);
  CHECK(a.frames == b.frames);
  CHECK(a.labels == b.labels);
  for (double speed : {1.0, 0.7, 1.5, 3.0}) {
    cfg.speed = speed;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      auto v = gen_synthetic_scene(cfg, seed);
      REQUIRE(v.crossing);
      const auto positives = std::count(v.labels.begin(), v.labels.end(), 1);
      CHECK(positives == static_cast<long>(std::ceil(cfg.band_width / speed)));
      CHECK(v.labels[v.first_crossing] == 1);
      CHECK(v.labels[v.first_crossing - 1] == 0);
    }
  }
  cfg.crossing_probability = 0.0;
  for (std::uint64_t seed : {4u, 5u}) {
    auto v = gen_synthetic_scene(cfg, seed);
    CHECK(std::count(v.labels.begin(), v.labels.end(), 1) == 0);
  }
  for (const auto& f : a.frames)
    for (float p : f.pixels) CHECK((p >= 0.0f && p <= 1.0f));

  auto ds1 = gen_synthetic_dataset(cfg, 3, 7), ds2 = gen_synthetic_dataset(cfg, 3, 7);
  CHECK(ds1[2].frames == ds2[2].frames);
  CHECK(ds1[1].id == "v0001");
  cfg.band_top = 5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("weather changes frames but not labels") {
  SceneConfig cfg;
  cfg.frames = 30;
  auto clear = gen_synthetic_scene(cfg, 8);
  cfg.weather = WeatherNoise::fog_alpha;
  auto fog = gen_synthetic_scene(cfg, 8);
  CHECK(fog.labels == clear.labels);
  CHECK(fog.frames != clear.frames);
  CHECK(parse_weather("rain_streaks") == WeatherNoise::rain_streaks);
  CHECK_THROWS_AS(parse_weather("snow"), UsageError);
}

TEST_CASE("splits are whole-video, disjoint and stratified") {
  SceneConfig cfg;
  cfg.frames = 24;
  auto vids = gen_synthetic_dataset(cfg, 40, 3);
  auto s = split_videos(vids, SplitSpec{});
  std::set<std::size_t> seen;
  for (auto* part : {&s.train, &s.val, &s.test})
    for (auto i : *part) CHECK(seen.insert(i).second);
  CHECK(seen.size() == 40);
  CHECK(s.test.size() == 6);
  auto crossing_in = [&](const std::vector<std::size_t>& idx) {
    return std::count_if(idx.begin(), idx.end(), [&](std::size_t i) { return vids[i].crossing; });
  };
  CHECK(crossing_in(s.test) >= 1);
  CHECK(crossing_in(s.val) >= 1);
  auto again = split_videos(vids, SplitSpec{});
  CHECK(again.test == s.test);
  CHECK_THROWS_AS(split_videos(vids, SplitSpec{1.5, 0.1, 0}), UsageError);
}

TEST_CASE("clip batches are [T, B, C, H, W] with optional frame repetition") {
  SceneConfig cfg;
  cfg.frames = 20;
  cfg.width = cfg.height = 32;
  cfg.band_top = 20;
  cfg.band_width = 8;
  auto vids = gen_synthetic_dataset(cfg, 2, 4);
  ClipSource src(&vids, 4, 3);
  std::vector<ClipRef> clips{{0, 2, 0}, {1, 5, 0}};
  auto x = src.batch(clips);
  CHECK(x.shape() == Shape{12, 2, 1, 32, 32});
  const std::size_t plane = 32 * 32;
  // Timestep 4 of batch entry 1 is frame 5 + 4/3 = 6 of video 1.
  CHECK(x[(4 * 2 + 1) * plane + 100] == vids[1].frames[6].pixels[100]);
  CHECK_THROWS_AS(src.batch(std::vector<ClipRef>{{0, 18, 0}}), UsageError);
}

TEST_CASE("DVS encoding keeps labels and aligns frames") {
  SceneConfig cfg;
  cfg.frames = 24;
  cfg.crossing_probability = 1.0;
  auto v = gen_synthetic_scene(cfg, 12);
  auto d = to_dvs_video(v, cfg.fps);
  CHECK(d.frames.size() == v.frames.size());
  CHECK(d.labels == v.labels);
  CHECK(d.frames[0].channels == 2);
  for (float p : d.frames[0].pixels) CHECK(p == 0.0f);
  auto ev = encode_events(v, cfg.fps);
  // Frame k holds the events between source frames k-1 and k.
  double sum = 0;
  for (std::size_t k = 1; k < d.frames.size(); ++k)
    for (float p : d.frames[k].pixels) sum += p;
  CHECK(sum > 0);
  auto h = dvs::bin_events(ev, cfg.fps, v.frames.size() - 1);
  CHECK(h.total() == ev.events.size());
}

TEST_CASE("dataset round trip through PNG files") {
  SceneConfig cfg;
  cfg.frames = 10;
  cfg.width = cfg.height = 24;
  cfg.band_top = 10;
  cfg.band_width = 6;
  cfg.walker_h = 6;
  cfg.walker_w = 3;
  auto vids = gen_synthetic_dataset(cfg, 3, 5);
  const auto root = temp_dir("ds");
  write_dataset(root, vids);
  auto back = read_dataset(root);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].id == vids[i].id);
    CHECK(back[i].labels == vids[i].labels);
    CHECK(back[i].crossing == vids[i].crossing);
    for (std::size_t k = 0; k < vids[i].frames.size(); ++k)
      for (std::size_t j = 0; j < vids[i].frames[k].pixels.size(); ++j)
        CHECK(std::fabs(back[i].frames[k].pixels[j] - vids[i].frames[k].pixels[j]) <= 0.5f / 255.0f + 1e-6f);
  }
  Splits s{{0}, {1}, {2}};
  write_splits(root, vids, s);
  auto rs = read_splits(root, back);
  CHECK(rs.train == s.train);
  CHECK(rs.test == s.test);
  std::filesystem::remove(root / "v0001" / "labels.csv");
  CHECK_THROWS(read_dataset(root));
  std::filesystem::remove_all(root);
}

TEST_CASE("key-value config files") {
  auto kv = parse_kv("# comment\n lr = 0.001 \nname=sps_r18t # trailing\n\nseed = 3\nseed = 4\n");
  CHECK(kv.at("lr") == "0.001");
  CHECK(kv.at("name") == "sps_r18t");
  CHECK(kv.at("seed") == "4");
  CHECK(parse_kv(format_kv(kv)) == kv);
  CHECK_THROWS_AS(parse_kv("no equals sign here\n"), UsageError);

  TrainConfig tc;
  tc.lr = 3e-4;
  tc.batch_size = 8;
  tc.pos_weight_mode = PosWeightMode::fixed;
  tc.pos_weight = 2.5;
  auto rt = TrainConfig::from_kv(tc.to_kv());
  CHECK(rt.to_kv() == tc.to_kv());
  CHECK(tc.to_kv().count("initial_learning_rate") == 1);
  CHECK(tc.to_kv().count("early_stopping") == 1);
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

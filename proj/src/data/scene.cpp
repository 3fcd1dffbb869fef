#include "snn/data/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "snn/errors.hpp"

namespace snn::data {
namespace {

constexpr float kBackground = 0.45f;
constexpr float kRoad = 0.18f;
// Walker: bright head, dark torso, mid-grey legs with a gap between them.
constexpr float kHead = 0.92f;
constexpr float kTorso = 0.08f;
constexpr float kLegs = 0.62f;
// Zebra markings across the road: 4 bright columns in every 8.
constexpr float kStripe = 0.85f;
constexpr std::size_t kStripePeriod = 8;
constexpr std::size_t kStripeWidth = 4;
constexpr float kFogLevel = 0.75f;

std::size_t crossing_frames(const SceneConfig& cfg) {
  return static_cast<std::size_t>(std::ceil(static_cast<double>(cfg.band_width) / cfg.speed - 1e-12));
}

void draw_walker(dvs::Image& img, long feet, long left, const SceneConfig& cfg) {
  const long h = static_cast<long>(cfg.walker_h), w = static_cast<long>(cfg.walker_w);
  const long top = feet - h + 1;
  const long head_end = top + std::max(1L, h / 5);
  const long torso_end = top + std::max(2L, h / 2);
  const long gap_lo = w / 3, gap_hi = w - w / 3;
  for (long y = std::max(0L, top); y <= std::min<long>(feet, img.height - 1); ++y)
    for (long x = std::max(0L, left); x < std::min<long>(left + w, img.width); ++x) {
      if (y < head_end) {
        img.at(0, y, x) = kHead;
      } else if (y < torso_end) {
        img.at(0, y, x) = kTorso;
      } else if (x - left < gap_lo || x - left >= gap_hi) {
        img.at(0, y, x) = kLegs;
      }
    }
}

}  // namespace

std::string to_string(WeatherNoise w) {
  switch (w) {
    case WeatherNoise::none: return "none";
    case WeatherNoise::rain_streaks: return "rain_streaks";
    case WeatherNoise::fog_alpha: return "fog_alpha";
  }
  return "?";
}

WeatherNoise parse_weather(const std::string& name) {
  if (name == "none") return WeatherNoise::none;
  if (name == "rain_streaks") return WeatherNoise::rain_streaks;
  if (name == "fog_alpha") return WeatherNoise::fog_alpha;
  throw UsageError("unknown weather '" + name + "' (expected none, rain_streaks or fog_alpha)");
}

void SceneConfig::validate() const {
  if (width < walker_w + 4 || height < 8) throw UsageError("scene: image too small");
  if (!(speed > 0.0)) throw UsageError("scene: speed must be > 0");
  if (band_width == 0 || band_top + band_width >= height) throw UsageError("scene: road band must fit in the image");
  if (band_top < walker_h + 2) throw UsageError("scene: need room above the band for the walker");
  if (walker_h == 0 || walker_w == 0) throw UsageError("scene: walker size must be positive");
  if (!(crossing_probability >= 0.0 && crossing_probability <= 1.0)) {
    throw UsageError("scene: crossing probability must lie in [0, 1]");
  }
  if (!(fps > 0.0)) throw UsageError("scene: fps must be > 0");
  if (frames < crossing_frames(*this) + 2) throw UsageError("scene: too few frames for one crossing");
  if (weather_intensity < 0.0 || weather_intensity > 1.0) throw UsageError("scene: weather intensity must lie in [0, 1]");
}

Video gen_synthetic_scene(const SceneConfig& cfg, std::uint64_t seed, std::string id) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> texture(-0.04f, 0.04f);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  dvs::Image background(cfg.width, cfg.height, 1);
  for (std::size_t y = 0; y < cfg.height; ++y) {
    const bool road = y >= cfg.band_top && y < cfg.band_top + cfg.band_width;
    for (std::size_t x = 0; x < cfg.width; ++x) {
      const float base = !road ? kBackground : (x % kStripePeriod < kStripeWidth ? kStripe : kRoad);
      background.at(0, y, x) = base + texture(rng);
    }
  }

  Video v;
  v.id = std::move(id);
  v.crossing = unit(rng) < cfg.crossing_probability;
  const long W = static_cast<long>(cfg.width), H = static_cast<long>(cfg.height);
  const long x0 = std::uniform_int_distribution<long>(2, W - static_cast<long>(cfg.walker_w) - 2)(rng);
  const double phase = unit(rng) * 2.0 * std::numbers::pi;
  const std::size_t n_cross = crossing_frames(cfg);
  if (v.crossing) {
    const std::size_t lo = std::min(cfg.frames / 5, cfg.frames - n_cross - 1);
    v.first_crossing = std::uniform_int_distribution<std::size_t>(std::max<std::size_t>(lo, 1), cfg.frames - n_cross)(rng);
  }
  // Non-crossing walkers pace sideways on a row clear of the band.
  const bool above = unit(rng) < 0.5;
  const long band_end = static_cast<long>(cfg.band_top + cfg.band_width);
  const long side_feet = above ? std::uniform_int_distribution<long>(cfg.walker_h, cfg.band_top - 2)(rng)
                               : std::uniform_int_distribution<long>(std::min(band_end + 1, H - 1), H - 1)(rng);
  const double span = static_cast<double>(W - cfg.walker_w - 4);

  v.frames.reserve(cfg.frames);
  v.labels.reserve(cfg.frames);
  for (std::size_t k = 0; k < cfg.frames; ++k) {
    dvs::Image img = background;
    long feet, left;
    std::uint8_t label = 0;
    const long sway = std::lround(1.5 * std::sin(2.0 * std::numbers::pi * k / 20.0 + phase));
    if (v.crossing) {
      const double d = (static_cast<double>(k) - static_cast<double>(v.first_crossing)) * cfg.speed;
      const double pos = cfg.band_top + d;
      feet = std::clamp(static_cast<long>(std::floor(pos)), static_cast<long>(cfg.walker_h) - 1, H - 1);
      left = x0 + sway;
      label = (k >= v.first_crossing && d < static_cast<double>(cfg.band_width)) ? 1 : 0;
    } else {
      // Triangle wave across the image width.
      const double travel = std::fmod(x0 - 2 + k * cfg.speed, 2.0 * span);
      left = 2 + std::lround(travel <= span ? travel : 2.0 * span - travel);
      feet = side_feet;
    }
    draw_walker(img, feet, left, cfg);

    if (cfg.weather == WeatherNoise::rain_streaks) {
      const auto streaks = static_cast<std::size_t>(cfg.weather_intensity * cfg.width * cfg.height / 64.0);
      for (std::size_t s = 0; s < streaks; ++s) {
        const long sx = std::uniform_int_distribution<long>(0, W - 1)(rng);
        const long sy = std::uniform_int_distribution<long>(0, H - 1)(rng);
        const long len = std::uniform_int_distribution<long>(3, 7)(rng);
        for (long y = sy; y < std::min(H, sy + len); ++y) img.at(0, y, sx) += 0.35f;
      }
    } else if (cfg.weather == WeatherNoise::fog_alpha) {
      const float a = static_cast<float>(cfg.weather_intensity);
      for (auto& p : img.pixels) p = (1.0f - a) * p + a * kFogLevel;
    }
    for (auto& p : img.pixels) p = std::clamp(p, 0.0f, 1.0f);
    v.frames.push_back(std::move(img));
    v.labels.push_back(label);
  }
  return v;
}

std::vector<Video> gen_synthetic_dataset(const SceneConfig& cfg, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 master(seed);
  std::vector<Video> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char id[24];
    std::snprintf(id, sizeof id, "v%04zu", i);
    out.push_back(gen_synthetic_scene(cfg, master(), id));
  }
  return out;
}

}  // namespace snn::data

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snn/dvs/image.hpp"

namespace snn::data {

enum class WeatherNoise { none, rain_streaks, fog_alpha };

std::string to_string(WeatherNoise w);
WeatherNoise parse_weather(const std::string& name);

/// Synthetic street scene: a walker (bright head, dark torso, grey legs) and a
/// dark horizontal road band with bright zebra stripes.
/// In crossing videos the walker's feet row moves down through the band at
/// `speed` px/frame; a frame is labelled 1 while the feet row is inside it.
struct SceneConfig {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t frames = 900;
  double fps = 30.0;
  double speed = 1.0;        // px/frame while crossing
  std::size_t band_top = 28;
  std::size_t band_width = 16;
  std::size_t walker_h = 16;
  std::size_t walker_w = 6;
  double crossing_probability = 0.5;
  WeatherNoise weather = WeatherNoise::none;
  double weather_intensity = 0.3;

  void validate() const;
};

struct Video {
  std::string id;
  std::vector<dvs::Image> frames;
  std::vector<std::uint8_t> labels;
  bool crossing = false;
  std::size_t first_crossing = 0;  // meaningful when crossing

  std::size_t size() const { return frames.size(); }
};

/// Deterministic in (cfg, seed).
Video gen_synthetic_scene(const SceneConfig& cfg, std::uint64_t seed, std::string id = "video");

/// Videos "v0000", "v0001", ... with per-video seeds derived from `seed`.
std::vector<Video> gen_synthetic_dataset(const SceneConfig& cfg, std::size_t count, std::uint64_t seed);

}  // namespace snn::data

#include "snn/dvs/emulator.hpp"

#include <cmath>
#include <string>

namespace snn::dvs {
namespace {

// Slack for accumulated rounding in the reference level, so a change of
// exactly k thresholds yields k events.
constexpr double kCrossTol = 1e-9;

void check_frame(const Image& f, std::size_t w, std::size_t h) {
  if (f.channels != 1) throw FormatError("emulator expects grayscale frames, got " + std::to_string(f.channels) + " channels");
  if (f.width != w || f.height != h) {
    throw FormatError("frame size " + std::to_string(f.width) + "x" + std::to_string(f.height) +
                      " differs from " + std::to_string(w) + "x" + std::to_string(h));
  }
  for (float v : f.pixels) {
    if (!(v >= 0.0f && v <= 1.0f)) throw FormatError("pixel value outside [0, 1]: " + std::to_string(v));
  }
}

}  // namespace

void EmulatorConfig::validate() const {
  if (!(threshold_c > 0.0)) throw UsageError("threshold_c must be > 0");
  if (substeps < 1) throw UsageError("substeps must be >= 1");
  if (!(log_eps > 0.0)) throw UsageError("log_eps must be > 0");
}

Emulator::Emulator(EmulatorConfig cfg, double fps) : cfg_(cfg) {
  cfg_.validate();
  if (!(fps > 0.0)) throw UsageError("fps must be > 0");
  frame_us_ = 1e6 / fps;
}

void Emulator::reset(const Image& frame, double t0_us) {
  width_ = frame.width;
  height_ = frame.height;
  check_frame(frame, width_, height_);
  if (width_ > 0xFFFF || height_ > 0xFFFF) throw FormatError("frame dimensions exceed 65535");
  ref_.resize(frame.pixels.size());
  for (std::size_t i = 0; i < ref_.size(); ++i) {
    ref_[i] = std::log(static_cast<double>(frame.pixels[i]) + cfg_.log_eps);
  }
  prev_ = frame.pixels;
  t_us_ = t0_us;
}

std::vector<DVSEvent> Emulator::step(const Image& frame) {
  if (!started()) throw UsageError("Emulator::step before reset");
  check_frame(frame, width_, height_);
  std::vector<DVSEvent> out;
  const int S = cfg_.substeps;
  const double C = cfg_.threshold_c;
  for (int j = 1; j <= S; ++j) {
    const double frac = static_cast<double>(j) / S;
    const double t = t_us_ + (j - 0.5) / S * frame_us_;
    const auto t_us = static_cast<std::uint32_t>(std::floor(t));
    for (std::size_t y = 0; y < height_; ++y) {
      for (std::size_t x = 0; x < width_; ++x) {
        const std::size_t i = y * width_ + x;
        const double a = prev_[i], b = frame.pixels[i];
        const double L = std::log(a + (b - a) * frac + cfg_.log_eps);
        double& ref = ref_[i];
        while (L - ref >= C - kCrossTol) {
          out.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t_us, 1});
          ref += C;
        }
        while (ref - L >= C - kCrossTol) {
          out.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t_us, -1});
          ref -= C;
        }
      }
    }
  }
  prev_ = frame.pixels;
  t_us_ += frame_us_;
  sort_events(out);
  return out;
}

EventStream emulate_events(const std::vector<Image>& frames, double fps, const EmulatorConfig& cfg) {
  if (frames.size() < 2) throw UsageError("emulate_events needs at least 2 frames, got " + std::to_string(frames.size()));
  Emulator emu(cfg, fps);
  emu.reset(frames.front());
  EventStream s;
  s.width = frames.front().width;
  s.height = frames.front().height;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    auto ev = emu.step(frames[i]);
    s.events.insert(s.events.end(), ev.begin(), ev.end());
  }
  s.duration_us = static_cast<std::uint64_t>(std::llround(emu.time_us()));
  return s;
}

}  // namespace snn::dvs

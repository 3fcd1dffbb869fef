#pragma once

#include <vector>

#include "snn/dvs/events.hpp"
#include "snn/errors.hpp"

namespace snn::dvs {

struct EmulatorConfig {
  double threshold_c = 0.3;
  int substeps = 16;
  double log_eps = 1e-3;

  void validate() const;
};

/// Log-intensity change detector. Keeps a per-pixel reference level across
/// calls to step(), so a video can be fed in pieces.
class Emulator {
 public:
  Emulator(EmulatorConfig cfg, double fps);

  /// Sets the reference levels from `frame` at time t0_us.
  void reset(const Image& frame, double t0_us = 0.0);
  /// Emits events for the transition from the previous frame to `frame`.
  /// Events of one transition share the interval [t_prev, t_prev + 1/fps).
  std::vector<DVSEvent> step(const Image& frame);

  bool started() const { return !ref_.empty(); }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  double time_us() const { return t_us_; }

 private:
  EmulatorConfig cfg_;
  double frame_us_;
  std::size_t width_ = 0, height_ = 0;
  std::vector<double> ref_;
  std::vector<float> prev_;
  double t_us_ = 0.0;
};

/// Emulates the whole sequence. Frames must be single-channel and of equal
/// size; duration_us spans (n - 1) frame intervals.
EventStream emulate_events(const std::vector<Image>& frames, double fps, const EmulatorConfig& cfg = {});

}  // namespace snn::dvs

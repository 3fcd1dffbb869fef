#pragma once

#include "snn/data/scene.hpp"
#include "snn/dvs/emulator.hpp"

namespace snn::data {

/// Events for the whole video.
dvs::EventStream encode_events(const Video& video, double fps, const dvs::EmulatorConfig& cfg = {});

/// 2-channel frames aligned with the source video: frame 0 is empty and frame
/// k holds the events of the interval between source frames k-1 and k.
/// Labels are kept.
Video to_dvs_video(const Video& video, double fps, const dvs::EmulatorConfig& cfg = {});

}  // namespace snn::data

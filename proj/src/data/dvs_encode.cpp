#include "snn/data/dvs_encode.hpp"

#include "snn/dvs/frames.hpp"

namespace snn::data {

dvs::EventStream encode_events(const Video& video, double fps, const dvs::EmulatorConfig& cfg) {
  return dvs::emulate_events(video.frames, fps, cfg);
}

Video to_dvs_video(const Video& video, double fps, const dvs::EmulatorConfig& cfg) {
  const dvs::EventStream events = encode_events(video, fps, cfg);
  auto binned = dvs::events_to_frames(events, fps, video.size() - 1);
  Video out;
  out.id = video.id;
  out.labels = video.labels;
  out.crossing = video.crossing;
  out.first_crossing = video.first_crossing;
  out.frames.reserve(video.size());
  out.frames.emplace_back(video.frames.front().width, video.frames.front().height, 2);
  for (auto& f : binned) out.frames.push_back(std::move(f));
  return out;
}

}  // namespace snn::data

#include "snn/dvs/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snn::dvs {
namespace {

std::size_t bin_of(std::uint32_t t_us, double rate) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(t_us) * rate / 1e6));
}

}  // namespace

std::uint64_t EventHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

EventHistogram bin_events(const EventStream& stream, double frame_rate, std::optional<std::size_t> frame_count) {
  if (!(frame_rate > 0.0)) throw UsageError("frame_rate must be > 0");
  EventHistogram h;
  h.width = stream.width;
  h.height = stream.height;
  if (frame_count) {
    h.bins = *frame_count;
  } else {
    // duration_us is rounded to whole microseconds; allow that much slack.
    const double span = (static_cast<double>(stream.duration_us) - 1.0) * frame_rate / 1e6;
    h.bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span)));
    if (!stream.events.empty()) h.bins = std::max(h.bins, bin_of(stream.events.back().t_us, frame_rate) + 1);
  }
  h.counts.assign(h.bins * 2 * h.width * h.height, 0);
  for (const auto& e : stream.events) {
    const std::size_t b = bin_of(e.t_us, frame_rate);
    if (b >= h.bins) continue;  // past an explicit frame count
    const std::size_t ch = e.polarity > 0 ? 0 : 1;
    ++h.counts[((b * 2 + ch) * h.height + e.y) * h.width + e.x];
  }
  return h;
}

std::vector<Image> events_to_frames(const EventStream& stream, double frame_rate,
                                    std::optional<std::size_t> frame_count, int cap) {
  if (cap < 1) throw UsageError("saturation cap must be >= 1");
  const EventHistogram h = bin_events(stream, frame_rate, frame_count);
  std::vector<Image> frames(h.bins, Image(h.width, h.height, 2));
  const std::size_t plane = 2 * h.width * h.height;
  for (std::size_t b = 0; b < h.bins; ++b) {
    for (std::size_t i = 0; i < plane; ++i) {
      const auto c = std::min<std::uint32_t>(h.counts[b * plane + i], static_cast<std::uint32_t>(cap));
      frames[b].pixels[i] = static_cast<float>(c) / static_cast<float>(cap);
    }
  }
  return frames;
}

Image to_red_blue(const Image& two_channel) {
  if (two_channel.channels != 2) throw FormatError("to_red_blue expects a 2-channel image");
  Image out(two_channel.width, two_channel.height, 3);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x) {
      out.at(0, y, x) = two_channel.at(0, y, x);
      out.at(2, y, x) = two_channel.at(1, y, x);
    }
  return out;
}

}  // namespace snn::dvs

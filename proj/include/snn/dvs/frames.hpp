#pragma once

#include <optional>
#include <vector>

#include "snn/dvs/events.hpp"
#include "snn/errors.hpp"

namespace snn::dvs {

inline constexpr int kDefaultSaturationCap = 8;

/// Raw per-bin counts, [bin][channel][y][x], channel 0 positive, 1 negative.
struct EventHistogram {
  std::size_t bins = 0, width = 0, height = 0;
  std::vector<std::uint32_t> counts;
  std::uint32_t at(std::size_t bin, std::size_t ch, std::size_t y, std::size_t x) const {
    return counts[((bin * 2 + ch) * height + y) * width + x];
  }
  std::uint64_t total() const;
};

/// Bin index of an event is floor(t * rate). With no explicit count the
/// number of bins covers duration_us (at least one).
EventHistogram bin_events(const EventStream& stream, double frame_rate,
                          std::optional<std::size_t> frame_count = std::nullopt);

/// 2-channel frames with counts clipped at `cap` and divided by it.
std::vector<Image> events_to_frames(const EventStream& stream, double frame_rate,
                                    std::optional<std::size_t> frame_count = std::nullopt,
                                    int cap = kDefaultSaturationCap);

/// Red = positive, blue = negative, for viewing.
Image to_red_blue(const Image& two_channel);

}  // namespace snn::dvs

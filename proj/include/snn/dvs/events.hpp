#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "snn/dvs/image.hpp"

namespace snn::dvs {

struct DVSEvent {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::uint32_t t_us = 0;
  std::int8_t polarity = 1;  // +1 or -1
  bool operator==(const DVSEvent&) const = default;
};

/// Events sorted by t_us, ties by (y, x, polarity).
struct EventStream {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<DVSEvent> events;
  std::uint64_t duration_us = 0;

  /// Width, height and events; duration is not stored on disk.
  bool same_events(const EventStream& other) const {
    return width == other.width && height == other.height && events == other.events;
  }
};

/// Orders events by (t_us, y, x, polarity).
void sort_events(std::vector<DVSEvent>& events);

// File layout, little-endian:
//   "DVS1" | width u16 | height u16 | event_count u64        (16 bytes)
//   event_count x { x u16 | y u16 | t_us u32 | polarity i8 | 3 zero bytes }
inline constexpr std::size_t kEventHeaderBytes = 16;
inline constexpr std::size_t kEventRecordBytes = 12;

void write_events(const std::filesystem::path& path, const EventStream& stream);
/// duration_us of the result is the last timestamp (0 when empty).
EventStream read_events(const std::filesystem::path& path);

}  // namespace snn::dvs

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>
#include <tuple>

#include "snn/dvs/events.hpp"

namespace snn::dvs {
namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const std::string& in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

void sort_events(std::vector<DVSEvent>& events) {
  std::stable_sort(events.begin(), events.end(), [](const DVSEvent& a, const DVSEvent& b) {
    return std::tie(a.t_us, a.y, a.x, a.polarity) < std::tie(b.t_us, b.y, b.x, b.polarity);
  });
}

void write_events(const std::filesystem::path& path, const EventStream& stream) {
  if (stream.width > 0xFFFF || stream.height > 0xFFFF) throw FormatError("stream dimensions exceed 65535");
  std::string out = "DVS1";
  out.reserve(kEventHeaderBytes + stream.events.size() * kEventRecordBytes);
  put_le(out, stream.width, 2);
  put_le(out, stream.height, 2);
  put_le(out, stream.events.size(), 8);
  for (const auto& e : stream.events) {
    put_le(out, e.x, 2);
    put_le(out, e.y, 2);
    put_le(out, e.t_us, 4);
    out.push_back(static_cast<char>(e.polarity));
    out.append(3, '\0');
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("failed writing " + path.string());
}

EventStream read_events(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open event file " + path.string());
  const std::string in(std::istreambuf_iterator<char>(f), {});
  if (in.size() < kEventHeaderBytes) {
    throw FormatError("event file truncated in header at byte offset " + std::to_string(in.size()));
  }
  if (in.compare(0, 4, "DVS1") != 0) throw FormatError("bad event file magic at byte offset 0");
  EventStream s;
  s.width = get_le(in, 4, 2);
  s.height = get_le(in, 6, 2);
  const std::uint64_t count = get_le(in, 8, 8);
  s.events.reserve(std::min<std::uint64_t>(count, (in.size() - kEventHeaderBytes) / kEventRecordBytes));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::size_t at = kEventHeaderBytes + i * kEventRecordBytes;
    if (at + kEventRecordBytes > in.size()) {
      throw FormatError("event file truncated at record " + std::to_string(i) + " (byte offset " +
                        std::to_string(at) + ")");
    }
    DVSEvent e;
    e.x = static_cast<std::uint16_t>(get_le(in, at, 2));
    e.y = static_cast<std::uint16_t>(get_le(in, at + 2, 2));
    e.t_us = static_cast<std::uint32_t>(get_le(in, at + 4, 4));
    e.polarity = static_cast<std::int8_t>(in[at + 8]);
    if (e.polarity != 1 && e.polarity != -1) {
      throw FormatError("bad polarity in record " + std::to_string(i) + " at byte offset " + std::to_string(at + 8));
    }
    if (e.x >= s.width || e.y >= s.height) {
      throw FormatError("event outside sensor in record " + std::to_string(i) + " at byte offset " +
                        std::to_string(at));
    }
    if (!s.events.empty() && e.t_us < s.events.back().t_us) {
      throw FormatError("timestamps decrease at record " + std::to_string(i) + " (byte offset " +
                        std::to_string(at + 4) + ")");
    }
    s.events.push_back(e);
  }
  const std::size_t expected = kEventHeaderBytes + count * kEventRecordBytes;
  if (in.size() != expected) {
    throw FormatError("trailing bytes after last record at byte offset " + std::to_string(expected));
  }
  s.duration_us = s.events.empty() ? 0 : s.events.back().t_us;
  return s;
}

}  // namespace snn::dvs

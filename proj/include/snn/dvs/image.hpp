#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <vector>

namespace snn::dvs {

/// Malformed file or inconsistent input data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Planar float image, pixels laid out [channel][row][column], values
/// nominally in [0, 1].
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c = 1, float fill = 0.0f)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  float& at(std::size_t c, std::size_t y, std::size_t x) { return pixels[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels[(c * height + y) * width + x];
  }
  bool operator==(const Image&) const = default;
};

/// Nearest-neighbour resampling: source index = floor(dst * src / target).
/// Never synthesizes a value absent from the source.
Image resize_nearest(const Image& image, std::size_t target_w, std::size_t target_h);

/// Source row/column picked for destination index `dst`.
std::size_t nearest_source_index(std::size_t dst, std::size_t src_size, std::size_t target_size);

/// 8-bit PNG I/O. Grayscale files load as 1 channel, colour as 3 (alpha
/// dropped). Values are scaled to [0, 1].
Image read_png(const std::filesystem::path& path);
/// Writes 1-channel images as grayscale, 2- or 3-channel images as RGB (a
/// missing third channel is written as zero).
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace snn::dvs

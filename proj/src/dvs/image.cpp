#include "snn/dvs/image.hpp"

#include <algorithm>

namespace snn::dvs {

std::size_t nearest_source_index(std::size_t dst, std::size_t src_size, std::size_t target_size) {
  // floor(dst * src / target), exact in integers.
  const std::size_t idx = (dst * src_size) / target_size;
  return std::min(idx, src_size - 1);
}

Image resize_nearest(const Image& image, std::size_t target_w, std::size_t target_h) {
  if (target_w == 0 || target_h == 0) throw FormatError("resize_nearest: target size must be >= 1");
  if (target_w == image.width && target_h == image.height) return image;
  Image out(target_w, target_h, image.channels);
  std::vector<std::size_t> xs(target_w), ys(target_h);
  for (std::size_t x = 0; x < target_w; ++x) xs[x] = nearest_source_index(x, image.width, target_w);
  for (std::size_t y = 0; y < target_h; ++y) ys[y] = nearest_source_index(y, image.height, target_h);
  for (std::size_t c = 0; c < image.channels; ++c)
    for (std::size_t y = 0; y < target_h; ++y)
      for (std::size_t x = 0; x < target_w; ++x) out.at(c, y, x) = image.at(c, ys[y], xs[x]);
  return out;
}

}  // namespace snn::dvs

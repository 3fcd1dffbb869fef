#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "snn/dvs/image.hpp"

namespace snn::dvs {

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw FormatError("cannot read PNG " + path.string() + ": " + img.message);
  }
  const bool colour = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = colour ? 3 : 1;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  Image out(img.width, img.height, channels);
  for (std::size_t y = 0; y < out.height; ++y)
    for (std::size_t x = 0; x < out.width; ++x)
      for (std::size_t c = 0; c < channels; ++c) {
        out.at(c, y, x) = static_cast<float>(buf[(y * out.width + x) * channels + c]) / 255.0f;
      }
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.channels == 0 || image.channels > 3) {
    throw FormatError("write_png: unsupported channel count " + std::to_string(image.channels));
  }
  const std::size_t out_ch = image.channels == 1 ? 1 : 3;
  std::vector<png_byte> buf(image.width * image.height * out_ch, 0);
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < image.channels; ++c) {
        const float v = std::clamp(image.at(c, y, x), 0.0f, 1.0f);
        buf[(y * image.width + x) * out_ch + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = out_ch == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw FormatError("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace snn::dvs

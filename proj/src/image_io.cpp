#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "cap/dataset.hpp"

namespace cap {

Tensor read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw FormatError(path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw FormatError(path.string() + ": " + img.message);
  }
  Tensor t({img.height, img.width, 3});
  for (std::size_t i = 0; i < buf.size(); ++i) t[i] = buf[i] / 255.0;
  return t;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3)
    throw DimensionError("write_png: expected [H x W x 3], got " + to_string(image.shape()));
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.dim(1));
  img.height = static_cast<png_uint_32>(image.dim(0));
  img.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(image.size());
  for (std::size_t i = 0; i < buf.size(); ++i)
    buf[i] = static_cast<png_byte>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr))
    throw FormatError(path.string() + ": " + img.message);
}

}  // namespace cap

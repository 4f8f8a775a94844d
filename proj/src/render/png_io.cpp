#include "psdf/error.hpp"
#include "psdf/render/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace psdf::render {

void write_png(const Image& image, const std::string& path) {
  std::vector<png_byte> bytes(image.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<png_byte>(std::lround(std::clamp(image.data[i], 0.0f, 1.0f) * 255.0f));
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw DataError("cannot write image " + path + ": " + message);
  }
}

Image read_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw DataError("cannot read image " + path + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, bytes.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw DataError("cannot decode image " + path + ": " + message);
  }
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  for (std::size_t i = 0; i < bytes.size(); ++i) image.data[i] = bytes[i] / 255.0f;
  return image;
}

}  // namespace psdf::render

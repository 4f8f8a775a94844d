#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace psdf::render {

/// Interleaved RGB image with values in [0, 1]; pixel (x, y) channel c is at
/// (y * width + x) * 3 + c.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * kChannels, fill) {}

  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * kChannels + c]; }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
};

/// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded to the nearest level.
void write_png(const Image& image, const std::string& path);
Image read_png(const std::string& path);

}  // namespace psdf::render

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace augpt {

// 8-bit RGB image, row-major, 3 channel bytes per pixel.
// Interpolating geometric transforms require width >= 8 and height >= 8;
// pointwise ops work on anything non-empty.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  static Raster filled(int w, int h, uint8_t r, uint8_t g, uint8_t b);

  bool valid() const {
    return width > 0 && height > 0 &&
           pixels.size() == static_cast<size_t>(width) * height * 3;
  }

  size_t offset(int x, int y) const {
    return (static_cast<size_t>(y) * width + x) * 3;
  }
  uint8_t at(int x, int y, int ch) const { return pixels[offset(x, y) + ch]; }
  uint8_t& at(int x, int y, int ch) { return pixels[offset(x, y) + ch]; }

  bool operator==(const Raster&) const = default;
};

// Binary PPM ("P6", maxval 255). The writer emits a canonical header so that
// load -> save -> load round-trips the pixel payload bit-exactly.
Raster load_ppm(const std::filesystem::path& path);
void save_ppm(const Raster& img, const std::filesystem::path& path);

// In-memory forms of the same encoding (used by tests and atomic writers).
Raster decode_ppm(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> encode_ppm(const Raster& img);

}  // namespace augpt

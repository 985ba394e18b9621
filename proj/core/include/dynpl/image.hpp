#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dynpl {

/// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const { return pixels.empty(); }
};

/// Binary PGM (P5, maxval <= 255).
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// PNG of any color type, converted to 8-bit gray.
GrayImage read_png(const std::filesystem::path& path);

/// Dispatches on file magic (P5 or PNG signature).
GrayImage read_image(const std::filesystem::path& path);

}  // namespace dynpl

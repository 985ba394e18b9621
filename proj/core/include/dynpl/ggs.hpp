#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>

#include "dynpl/image.hpp"

namespace dynpl {

inline constexpr int kGgsGridRows = 3;
inline constexpr int kGgsGridCols = 4;
inline constexpr int kGgsCells = kGgsGridRows * kGgsGridCols;
inline constexpr int kGgsBins = 256;
inline constexpr double kDefaultGgsScale = 0.8;
inline constexpr double kDefaultKeyframeCoeff = 0.4;

using GrayHistogram = std::array<std::uint32_t, kGgsBins>;

/// Global gray similarity descriptor: 256-bin histograms of a 3x4 grid over
/// the original image (level 0) and a downscaled copy (level 1).
struct GGSDescriptor {
  std::array<std::array<GrayHistogram, kGgsCells>, 2> hist{};
  int width = 0;
  int height = 0;
  int scaled_width = 0;
  int scaled_height = 0;

  std::int64_t image_area() const { return static_cast<std::int64_t>(width) * height; }
  std::int64_t level_mass(int level) const;
};

/// Area-averaging (box filter) resample to round(scale * size), rounding
/// gray levels half away from zero.
GrayImage downscale_area(const GrayImage& image, double scale);

/// Throws std::invalid_argument for images smaller than 4x3.
GGSDescriptor compute_ggs(const GrayImage& image, double scale = kDefaultGgsScale);

/// sim_v: (1/(M*N)) * sum over the 12 cells of the minimum L1 distance over
/// the four (level_a, level_b) pairings. Zero for identical descriptors;
/// larger means less similar. Throws std::invalid_argument on a resolution
/// mismatch.
double ggs_dissimilarity(const GGSDescriptor& a, const GGSDescriptor& b);

/// GGS_th = pkf + coeff * (pkf_next - ppkf_next).
double keyframe_threshold(double ggs_pkf, double ggs_pkf_next, double ggs_ppkf_next,
                          double coeff = kDefaultKeyframeCoeff);

inline bool is_new_keyframe(double current_scalar, double threshold) {
  return current_scalar > threshold;
}

/// Golden-file dump: 24 lines of 256 space-separated counts (level 0 first).
void write_ggs(std::ostream& out, const GGSDescriptor& d);

}  // namespace dynpl

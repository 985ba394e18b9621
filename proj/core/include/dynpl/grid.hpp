#pragma once

#include <algorithm>
#include <cmath>

namespace dynpl {

/// Exact partition of `extent` pixels into `cells` bands: band g spans
/// columns floor(g*extent/cells) .. floor((g+1)*extent/cells) - 1.
constexpr int grid_begin(int g, int extent, int cells) {
  return static_cast<int>(static_cast<long long>(g) * extent / cells);
}

/// Band containing integer pixel column `col` under grid_begin's partition.
constexpr int grid_cell_of_pixel(int col, int extent, int cells) {
  const long long num = static_cast<long long>(col + 1) * cells + extent - 1;
  return static_cast<int>(num / extent) - 1;
}

/// Band containing a sub-pixel coordinate (clamped into the image).
inline int grid_cell_of(double coord, int extent, int cells) {
  const int col = std::clamp(static_cast<int>(std::floor(coord)), 0, extent - 1);
  return grid_cell_of_pixel(col, extent, cells);
}

}  // namespace dynpl

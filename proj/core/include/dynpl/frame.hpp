#pragma once

#include <optional>
#include <vector>

#include "dynpl/camera.hpp"

namespace dynpl {

struct StereoLineFeature {
  LineFeature2D left;
  std::optional<LineFeature2D> right;
};

/// Features of one stereo frame. Temporal association is by id.
struct StereoFrame {
  std::size_t index = 0;
  double timestamp = 0.0;
  std::vector<PointFeature2D> points;
  std::vector<StereoLineFeature> lines;

  std::vector<LineFeature2D> left_lines() const {
    std::vector<LineFeature2D> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back(l.left);
    return out;
  }
};

}  // namespace dynpl

#include "dynpl/dynamics.hpp"

#include <cmath>
#include <ostream>
#include <unordered_map>

namespace dynpl {

namespace {

constexpr double kMinPredictedDepth = 1e-6;

double distance_to_infinite_line(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  return std::abs(d.x() * (p.y() - a.y()) - d.y() * (p.x() - a.x())) / d.norm();
}

}  // namespace

std::optional<Vec2> predict_point(const Vec3& prev_camera_point, const MotionModel& model,
                                  const StereoCamera& cam) {
  const Vec3 p = model.previous_from_pprevious * prev_camera_point;
  if (p.z() <= kMinPredictedDepth) return std::nullopt;
  return cam.project(p);
}

std::size_t DynamicGridMap::flagged_count() const {
  std::size_t n = 0;
  for (bool f : flagged) n += f ? 1 : 0;
  return n;
}

DynamicGridMap detect_dynamic_grids(std::span<const PointMatch> matches, const MotionModel& model,
                                    const StereoCamera& cam, double tau_pt) {
  DynamicGridMap map;
  std::vector<double> sums(map.counts.size(), 0.0);
  for (const auto& m : matches) {
    const auto p = triangulate_point(m.prev, cam);
    if (!p) continue;
    const auto predicted = predict_point(*p, model, cam);
    if (!predicted) continue;
    const int cell = m.grid_curr.linear();
    sums[cell] += (m.curr.pixel() - *predicted).squaredNorm();
    ++map.counts[cell];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (map.counts[c] == 0) continue;
    map.mean_sq_error[c] = sums[c] / map.counts[c];
    map.over_threshold[c] = map.mean_sq_error[c] > tau_pt;
  }
  for (int row = 0; row < kPointGridRows; ++row) {
    for (int col = 0; col < kPointGridCols; ++col) {
      if (!map.over_threshold[row * kPointGridCols + col]) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int r = row + dr;
          const int c = col + dc;
          if (r < 0 || c < 0 || r >= kPointGridRows || c >= kPointGridCols) continue;
          map.flagged[r * kPointGridCols + c] = true;
        }
      }
    }
  }
  return map;
}

std::optional<double> line_dynamic_error(const LineMatch& match, const Landmark3D& prev_camera_line,
                                         const MotionModel& model, const StereoCamera& cam) {
  const auto s = predict_point(prev_camera_line.start, model, cam);
  const auto e = predict_point(prev_camera_line.end, model, cam);
  if (!s || !e) return std::nullopt;
  if ((*e - *s).norm() <= 1e-9) return std::nullopt;
  const Vec2& a = match.curr.start;
  const Vec2& b = match.curr.end;
  if ((b - a).norm() <= 0.0) return std::nullopt;
  const double d = 0.5 * (distance_to_infinite_line(*s, a, b) + distance_to_infinite_line(*e, a, b));
  return d * d;
}

DynamicLLGSet detect_dynamic_llgs(std::span<const DynamicLineInput> lines,
                                  std::span<const LocalLineGroup> llgs_curr, const MotionModel& model,
                                  const StereoCamera& cam, double rho, LlgAggregation aggregation) {
  DynamicLLGSet out;
  out.group_error.resize(llgs_curr.size());
  std::unordered_map<FeatureId, double> error_by_id;
  for (const auto& in : lines) {
    if (auto err = line_dynamic_error(in.match, in.prev_camera_line, model, cam)) {
      error_by_id[in.match.curr.id] = *err;
    }
  }
  for (std::size_t g = 0; g < llgs_curr.size(); ++g) {
    double sum = 0.0;
    std::size_t count = 0;
    for (auto id : llgs_curr[g].members) {
      if (auto it = error_by_id.find(id); it != error_by_id.end()) {
        sum += it->second;
        ++count;
      }
    }
    if (count == 0) continue;
    const double e_dyna = aggregation == LlgAggregation::mean ? sum / static_cast<double>(count) : sum;
    out.group_error[g] = e_dyna;
    if (e_dyna > rho) {
      out.flagged_groups.push_back(g);
      out.dynamic_lines.insert(llgs_curr[g].members.begin(), llgs_curr[g].members.end());
    }
  }
  return out;
}

void write_dynamics_csv_header(std::ostream& out) { out << "frame,kind,index,error,flagged\n"; }

void write_dynamics_csv(std::ostream& out, std::size_t frame, const DynamicGridMap& grids,
                        const DynamicLLGSet& llgs) {
  for (std::size_t c = 0; c < grids.counts.size(); ++c) {
    if (grids.counts[c] == 0 && !grids.flagged[c]) continue;
    out << frame << ",grid," << c << ',' << grids.mean_sq_error[c] << ',' << (grids.flagged[c] ? 1 : 0)
        << '\n';
  }
  std::vector<bool> flagged(llgs.group_error.size(), false);
  for (auto g : llgs.flagged_groups) flagged[g] = true;
  for (std::size_t g = 0; g < llgs.group_error.size(); ++g) {
    if (!llgs.group_error[g]) continue;
    out << frame << ",llg," << g << ',' << *llgs.group_error[g] << ',' << (flagged[g] ? 1 : 0) << '\n';
  }
}

}  // namespace dynpl

#include "dynpl/association.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "dynpl/grid.hpp"

namespace dynpl {

GridIndex point_grid_cell(const Vec2& px, int width, int height) {
  return {grid_cell_of(px.x(), width, kPointGridCols), grid_cell_of(px.y(), height, kPointGridRows)};
}

int hamming_distance(const BinaryDescriptor& a, const BinaryDescriptor& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
  return d;
}

std::vector<PointFeature2D> match_stereo(std::span<const KeypointObservation> left,
                                         std::span<const KeypointObservation> right,
                                         const StereoMatchOptions& options) {
  std::vector<PointFeature2D> out;
  out.reserve(left.size());
  std::vector<bool> used(right.size(), false);

  std::unordered_map<FeatureId, std::size_t> right_by_id;
  if (options.match_by_id) {
    for (std::size_t j = 0; j < right.size(); ++j) right_by_id.emplace(right[j].id, j);
  }

  for (const auto& l : left) {
    PointFeature2D f{l.id, l.u, l.v, std::nullopt};
    if (options.match_by_id) {
      if (auto it = right_by_id.find(l.id); it != right_by_id.end() && !used[it->second]) {
        used[it->second] = true;
        f.disparity = l.u - right[it->second].u;
      }
      out.push_back(f);
      continue;
    }

    std::optional<std::size_t> best;
    int best_hamming = std::numeric_limits<int>::max();
    double best_dv = std::numeric_limits<double>::infinity();
    double best_disp = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < right.size(); ++j) {
      if (used[j]) continue;
      const auto& r = right[j];
      const double dv = std::abs(r.v - l.v);
      const double disp = l.u - r.u;
      if (dv > options.row_tolerance || disp < 0.0 || disp > options.max_disparity) continue;
      if (l.descriptor && r.descriptor) {
        const int h = hamming_distance(*l.descriptor, *r.descriptor);
        if (h > options.max_hamming) continue;
        if (h < best_hamming || (h == best_hamming && disp < best_disp)) {
          best = j;
          best_hamming = h;
          best_disp = disp;
        }
      } else if (dv < best_dv || (dv == best_dv && disp < best_disp)) {
        best = j;
        best_dv = dv;
        best_disp = disp;
      }
    }
    if (best) {
      used[*best] = true;
      f.disparity = l.u - right[*best].u;
    }
    out.push_back(f);
  }
  return out;
}

std::vector<PointMatch> match_points_by_id(std::span<const PointFeature2D> prev,
                                           std::span<const PointFeature2D> curr, int width,
                                           int height) {
  std::unordered_map<FeatureId, const PointFeature2D*> by_id;
  by_id.reserve(prev.size());
  for (const auto& p : prev) by_id.emplace(p.id, &p);
  std::vector<PointMatch> matches;
  matches.reserve(curr.size());
  for (const auto& c : curr) {
    auto it = by_id.find(c.id);
    if (it == by_id.end()) continue;
    PointMatch m;
    m.prev = *it->second;
    m.curr = c;
    m.grid_prev = point_grid_cell(m.prev.pixel(), width, height);
    m.grid_curr = point_grid_cell(m.curr.pixel(), width, height);
    matches.push_back(m);
  }
  return matches;
}

std::optional<double> grid_cross_value(const Vec2& target, std::span<const Vec2> peers) {
  if (peers.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& p : peers) sum += target.x() * p.y() - target.y() * p.x();
  return sum / static_cast<double>(peers.size());
}

FilterResult<PointMatch> filter_point_matches(std::span<const PointMatch> matches,
                                              const PointFilterOptions& options) {
  FilterResult<PointMatch> result;
  const std::size_t n = matches.size();
  if (n == 0) return result;

  Vec2 centroid_prev = Vec2::Zero();
  Vec2 centroid_curr = Vec2::Zero();
  for (const auto& m : matches) {
    centroid_prev += m.prev.pixel();
    centroid_curr += m.curr.pixel();
  }
  centroid_prev /= static_cast<double>(n);
  centroid_curr /= static_cast<double>(n);

  std::vector<Vec2> qp(n);
  std::vector<Vec2> qc(n);
  std::vector<std::vector<std::size_t>> buckets(kPointGridCols * kPointGridRows);
  for (std::size_t k = 0; k < n; ++k) {
    qp[k] = matches[k].prev.pixel() - centroid_prev;
    qc[k] = matches[k].curr.pixel() - centroid_curr;
    buckets[matches[k].grid_prev.linear()].push_back(k);
  }

  std::vector<double> g_prev(n, 0.0);
  std::vector<double> g_curr(n, 0.0);
  std::vector<std::optional<double>> delta(n);
  std::vector<double> threshold(n, std::numeric_limits<double>::infinity());
  std::vector<bool> singleton(n, false);

  std::vector<Vec2> peers_p;
  std::vector<Vec2> peers_c;
  auto evaluate = [&](std::size_t k, const std::vector<std::size_t>& peer_idx) {
    peers_p.clear();
    peers_c.clear();
    for (auto i : peer_idx) {
      if (i == k) continue;
      peers_p.push_back(qp[i]);
      peers_c.push_back(qc[i]);
    }
    const auto gp = grid_cross_value(qp[k], peers_p);
    const auto gc = grid_cross_value(qc[k], peers_c);
    if (!gp || !gc) return;
    g_prev[k] = *gp;
    g_curr[k] = *gc;
    delta[k] = *gp - *gc;
  };

  double image_sum = 0.0;
  std::size_t image_count = 0;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    const auto& bucket = buckets[b];
    if (bucket.empty()) continue;
    if (bucket.size() >= 2) {
      double sum = 0.0;
      for (auto k : bucket) {
        evaluate(k, bucket);
        sum += std::abs(*delta[k]);
      }
      const double thr = options.alpha * sum / static_cast<double>(bucket.size()) + options.epsilon;
      for (auto k : bucket) threshold[k] = thr;
      image_sum += sum;
      image_count += bucket.size();
      continue;
    }
    const std::size_t k = bucket.front();
    singleton[k] = true;
    const int col = static_cast<int>(b) % kPointGridCols;
    const int row = static_cast<int>(b) / kPointGridCols;
    std::vector<std::size_t> neighbours;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const int r = row + dr;
        const int c = col + dc;
        if ((dr == 0 && dc == 0) || r < 0 || c < 0 || r >= kPointGridRows || c >= kPointGridCols) continue;
        const auto& nb = buckets[r * kPointGridCols + c];
        neighbours.insert(neighbours.end(), nb.begin(), nb.end());
      }
    }
    std::sort(neighbours.begin(), neighbours.end());
    evaluate(k, neighbours);
    if (delta[k]) {
      image_sum += std::abs(*delta[k]);
      ++image_count;
    }
  }

  const double image_threshold =
      image_count ? options.alpha * image_sum / static_cast<double>(image_count) + options.epsilon
                  : std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < n; ++k) {
    PointMatch m = matches[k];
    m.g_prev = g_prev[k];
    m.g_curr = g_curr[k];
    bool outlier = false;
    if (delta[k]) {
      const double thr = singleton[k] ? image_threshold : threshold[k];
      outlier = std::abs(*delta[k]) > thr;
    }
    (outlier ? result.outliers : result.inliers).push_back(m);
  }
  return result;
}

double line_angle_difference(const LineFeature2D& a, const LineFeature2D& b) {
  const Vec2 da = a.end - a.start;
  const Vec2 db = b.end - b.start;
  const double cross = std::abs(da.x() * db.y() - da.y() * db.x());
  const double dot = std::abs(da.dot(db));
  return std::atan2(cross, dot);
}

LineMatch LineMatch::make(const LineFeature2D& prev, const LineFeature2D& curr) {
  return {prev, curr, line_angle_difference(prev, curr), (curr.midpoint() - prev.midpoint()).norm()};
}

std::vector<LineMatch> match_lines_by_id(std::span<const LineFeature2D> prev,
                                         std::span<const LineFeature2D> curr) {
  std::unordered_map<FeatureId, const LineFeature2D*> by_id;
  for (const auto& p : prev) by_id.emplace(p.id, &p);
  std::vector<LineMatch> matches;
  for (const auto& c : curr) {
    if (auto it = by_id.find(c.id); it != by_id.end()) matches.push_back(LineMatch::make(*it->second, c));
  }
  return matches;
}

bool circular_domains_overlap(const LineFeature2D& a, const LineFeature2D& b) {
  return (a.midpoint() - b.midpoint()).norm() < 0.5 * (a.length() + b.length());
}

std::vector<LocalLineGroup> build_llgs(std::span<const LineFeature2D> lines) {
  const std::size_t n = lines.size();
  std::vector<bool> seen(n, false);
  std::vector<LocalLineGroup> groups;
  std::vector<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    seen[s] = true;
    queue.assign(1, s);
    LocalLineGroup g;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t i = queue[head];
      g.members.push_back(lines[i].id);
      for (std::size_t j = 0; j < n; ++j) {
        if (!seen[j] && circular_domains_overlap(lines[i], lines[j])) {
          seen[j] = true;
          queue.push_back(j);
        }
      }
    }
    std::sort(g.members.begin(), g.members.end());
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(),
            [](const LocalLineGroup& a, const LocalLineGroup& b) { return a.members.front() < b.members.front(); });
  return groups;
}

FilterResult<LineMatch> filter_line_matches(std::span<const LineMatch> matches,
                                            std::span<const LocalLineGroup> llgs_prev,
                                            const LineFilterOptions& options) {
  FilterResult<LineMatch> result;
  if (matches.empty()) return result;

  std::unordered_map<FeatureId, std::size_t> group_of;
  for (std::size_t g = 0; g < llgs_prev.size(); ++g) {
    for (auto id : llgs_prev[g].members) group_of.emplace(id, g);
  }

  struct Stats {
    double angle = 0.0;
    double dist = 0.0;
    std::size_t count = 0;
  };
  std::vector<Stats> per_group(llgs_prev.size());
  Stats image;
  std::vector<std::optional<std::size_t>> assigned(matches.size());
  for (std::size_t k = 0; k < matches.size(); ++k) {
    const auto& m = matches[k];
    image.angle += m.angle_diff;
    image.dist += m.midpoint_dist;
    ++image.count;
    if (auto it = group_of.find(m.prev.id); it != group_of.end()) {
      assigned[k] = it->second;
      auto& s = per_group[it->second];
      s.angle += m.angle_diff;
      s.dist += m.midpoint_dist;
      ++s.count;
    }
  }

  for (std::size_t k = 0; k < matches.size(); ++k) {
    const auto& m = matches[k];
    const Stats& s = (assigned[k] && per_group[*assigned[k]].count >= 2) ? per_group[*assigned[k]] : image;
    const double count = static_cast<double>(s.count);
    const bool angle_ok = !(m.angle_diff > options.mean_factor * s.angle / count);
    const bool dist_ok = !(m.midpoint_dist > options.mean_factor * s.dist / count);
    (angle_ok && dist_ok ? result.inliers : result.outliers).push_back(m);
  }
  return result;
}

}  // namespace dynpl

#include "dynpl/ggs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dynpl/grid.hpp"

namespace dynpl {

namespace {

struct AxisWeights {
  int first = 0;
  std::vector<double> weights;
  double total = 0.0;
};

// Coverage of source pixels by each destination pixel along one axis.
std::vector<AxisWeights> box_weights(int src, int dst) {
  std::vector<AxisWeights> out(dst);
  for (int i = 0; i < dst; ++i) {
    const double a = static_cast<double>(static_cast<long long>(i) * src) / dst;
    const double b = static_cast<double>(static_cast<long long>(i + 1) * src) / dst;
    const int x0 = static_cast<int>(std::floor(a));
    const int x1 = std::min(src - 1, static_cast<int>(std::ceil(b)) - 1);
    auto& w = out[i];
    w.first = x0;
    for (int x = x0; x <= x1; ++x) {
      const double overlap = std::min<double>(x + 1, b) - std::max<double>(x, a);
      w.weights.push_back(std::max(0.0, overlap));
      w.total += w.weights.back();
    }
  }
  return out;
}

void accumulate_histograms(const GrayImage& image, std::array<GrayHistogram, kGgsCells>& hist) {
  std::vector<int> col_cell(image.width);
  std::vector<int> row_cell(image.height);
  for (int x = 0; x < image.width; ++x) col_cell[x] = grid_cell_of_pixel(x, image.width, kGgsGridCols);
  for (int y = 0; y < image.height; ++y) row_cell[y] = grid_cell_of_pixel(y, image.height, kGgsGridRows);
  for (int y = 0; y < image.height; ++y) {
    const std::uint8_t* row = image.pixels.data() + static_cast<std::size_t>(y) * image.width;
    const int base = row_cell[y] * kGgsGridCols;
    for (int x = 0; x < image.width; ++x) ++hist[base + col_cell[x]][row[x]];
  }
}

std::int64_t l1_distance(const GrayHistogram& a, const GrayHistogram& b) {
  std::int64_t sum = 0;
  for (int k = 0; k < kGgsBins; ++k) {
    sum += std::llabs(static_cast<long long>(a[k]) - static_cast<long long>(b[k]));
  }
  return sum;
}

}  // namespace

std::int64_t GGSDescriptor::level_mass(int level) const {
  std::int64_t total = 0;
  for (const auto& h : hist[level]) {
    for (auto c : h) total += c;
  }
  return total;
}

GrayImage downscale_area(const GrayImage& image, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw std::invalid_argument("downscale factor must be in (0, 1]");
  const int w = std::max(1, static_cast<int>(std::lround(image.width * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(image.height * scale)));
  const auto wx = box_weights(image.width, w);
  const auto wy = box_weights(image.height, h);

  std::vector<double> rows(static_cast<std::size_t>(image.height) * w);
  for (int y = 0; y < image.height; ++y) {
    const std::uint8_t* src = image.pixels.data() + static_cast<std::size_t>(y) * image.width;
    double* dst = rows.data() + static_cast<std::size_t>(y) * w;
    for (int i = 0; i < w; ++i) {
      double acc = 0.0;
      const auto& cw = wx[i];
      for (std::size_t k = 0; k < cw.weights.size(); ++k) acc += cw.weights[k] * src[cw.first + k];
      dst[i] = acc;
    }
  }

  GrayImage out(w, h);
  for (int j = 0; j < h; ++j) {
    const auto& rw = wy[j];
    for (int i = 0; i < w; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rw.weights.size(); ++k) {
        acc += rw.weights[k] * rows[static_cast<std::size_t>(rw.first + k) * w + i];
      }
      const double value = acc / (rw.total * wx[i].total);
      out.at(i, j) = static_cast<std::uint8_t>(std::clamp(std::round(value), 0.0, 255.0));
    }
  }
  return out;
}

GGSDescriptor compute_ggs(const GrayImage& image, double scale) {
  if (image.width < kGgsGridCols || image.height < kGgsGridRows) {
    throw std::invalid_argument("GGS needs an image of at least 4x3 pixels");
  }
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw std::invalid_argument("GGS image buffer does not match its dimensions");
  }
  GGSDescriptor d;
  d.width = image.width;
  d.height = image.height;
  accumulate_histograms(image, d.hist[0]);
  const GrayImage scaled = downscale_area(image, scale);
  d.scaled_width = scaled.width;
  d.scaled_height = scaled.height;
  accumulate_histograms(scaled, d.hist[1]);
  return d;
}

double ggs_dissimilarity(const GGSDescriptor& a, const GGSDescriptor& b) {
  if (a.width != b.width || a.height != b.height || a.scaled_width != b.scaled_width ||
      a.scaled_height != b.scaled_height) {
    throw std::invalid_argument("GGS descriptors come from different image resolutions");
  }
  if (a.image_area() <= 0) throw std::invalid_argument("empty GGS descriptor");
  std::int64_t total = 0;
  for (int i = 0; i < kGgsCells; ++i) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (int p = 0; p < 2; ++p) {
      for (int q = 0; q < 2; ++q) best = std::min(best, l1_distance(a.hist[p][i], b.hist[q][i]));
    }
    total += best;
  }
  return static_cast<double>(total) / static_cast<double>(a.image_area());
}

double keyframe_threshold(double ggs_pkf, double ggs_pkf_next, double ggs_ppkf_next, double coeff) {
  return ggs_pkf + coeff * (ggs_pkf_next - ggs_ppkf_next);
}

void write_ggs(std::ostream& out, const GGSDescriptor& d) {
  for (int level = 0; level < 2; ++level) {
    for (const auto& h : d.hist[level]) {
      for (int k = 0; k < kGgsBins; ++k) {
        if (k) out << ' ';
        out << h[k];
      }
      out << '\n';
    }
  }
}

}  // namespace dynpl

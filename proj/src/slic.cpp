// SLIC superpixels (Achanta et al.) over CIELAB and pixel coordinates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "vlut/dataset.hpp"

namespace vlut {
namespace {

using Lab = Eigen::Array3d;

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3.0 * d * d) + 4.0 / 29.0;
}

// Linear sRGB primaries, D65 white.
Lab to_lab(const Rgb& rgb) {
  const double x = 0.4124564 * rgb[0] + 0.3575761 * rgb[1] + 0.1804375 * rgb[2];
  const double y = 0.2126729 * rgb[0] + 0.7151522 * rgb[1] + 0.0721750 * rgb[2];
  const double z = 0.0193339 * rgb[0] + 0.1191920 * rgb[1] + 0.9503041 * rgb[2];
  const double fx = lab_f(x / 0.95047), fy = lab_f(y), fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

struct Center {
  Lab lab;
  double x, y;
};

}  // namespace

SuperpixelMap slic_superpixels(const ImageRGB& image, int k, double compactness, int iterations) {
  const int w = image.width(), h = image.height();
  k = std::max(1, k);
  std::vector<Lab> lab(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) lab[static_cast<std::size_t>(y) * w + x] = to_lab(pixel(image, x, y).max(0.0));
  auto at = [&](int x, int y) -> const Lab& { return lab[static_cast<std::size_t>(y) * w + x]; };

  // Grid seeding with near-square cells.
  const int gx = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(k) * w / h))));
  const int gy = std::max(1, static_cast<int>(std::lround(static_cast<double>(k) / gx)));
  const double step_x = static_cast<double>(w) / gx, step_y = static_cast<double>(h) / gy;
  const double step = std::sqrt(static_cast<double>(w) * h / (gx * gy));
  std::vector<Center> centers;
  for (int j = 0; j < gy; ++j)
    for (int i = 0; i < gx; ++i) {
      int cx = std::min(w - 1, static_cast<int>((i + 0.5) * step_x));
      int cy = std::min(h - 1, static_cast<int>((j + 0.5) * step_y));
      // Move to the lowest gradient position in the 3x3 neighborhood.
      double best = std::numeric_limits<double>::infinity();
      int bx = cx, by = cy;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = cx + dx, y = cy + dy;
          if (x < 1 || y < 1 || x >= w - 1 || y >= h - 1) continue;
          const double g = (at(x + 1, y) - at(x - 1, y)).matrix().squaredNorm() +
                           (at(x, y + 1) - at(x, y - 1)).matrix().squaredNorm();
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      centers.push_back({at(bx, by), static_cast<double>(bx), static_cast<double>(by)});
    }

  std::vector<int> label(static_cast<std::size_t>(w) * h, -1);
  std::vector<double> dist(label.size());
  const double m2 = compactness * compactness;
  const double s2 = step * step;
  for (int it = 0; it < iterations; ++it) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const Center& ctr = centers[c];
      const int x0 = std::max(0, static_cast<int>(ctr.x - step)), x1 = std::min(w - 1, static_cast<int>(ctr.x + step));
      const int y0 = std::max(0, static_cast<int>(ctr.y - step)), y1 = std::min(h - 1, static_cast<int>(ctr.y + step));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const double dc = (at(x, y) - ctr.lab).matrix().squaredNorm();
          const double ds = (x - ctr.x) * (x - ctr.x) + (y - ctr.y) * (y - ctr.y);
          const double d = dc + ds / s2 * m2;
          const std::size_t idx = static_cast<std::size_t>(y) * w + x;
          if (d < dist[idx]) {
            dist[idx] = d;
            label[idx] = static_cast<int>(c);
          }
        }
    }
    std::vector<Center> sum(centers.size(), Center{Lab::Zero(), 0.0, 0.0});
    std::vector<int> n(centers.size(), 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int l = label[static_cast<std::size_t>(y) * w + x];
        if (l < 0) continue;
        sum[l].lab += at(x, y);
        sum[l].x += x;
        sum[l].y += y;
        ++n[l];
      }
    for (std::size_t c = 0; c < centers.size(); ++c)
      if (n[c] > 0) centers[c] = {sum[c].lab / n[c], sum[c].x / n[c], sum[c].y / n[c]};
  }

  // Connectivity: keep each label's components, merging fragments smaller than
  // a quarter of the nominal size into an adjacent segment.
  const std::size_t min_size = std::max<std::size_t>(1, static_cast<std::size_t>(w) * h / centers.size() / 4);
  std::vector<int> out(label.size(), -1);
  int next = 0;
  const int dx4[4] = {1, -1, 0, 0}, dy4[4] = {0, 0, 1, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t start = static_cast<std::size_t>(y) * w + x;
      if (out[start] >= 0) continue;
      std::vector<std::size_t> comp{start};
      out[start] = next;
      int adjacent = -1;
      for (std::size_t q = 0; q < comp.size(); ++q) {
        const int px = static_cast<int>(comp[q] % w), py = static_cast<int>(comp[q] / w);
        for (int d = 0; d < 4; ++d) {
          const int nx = px + dx4[d], ny = py + dy4[d];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (out[ni] >= 0 && out[ni] != next) adjacent = out[ni];
          if (out[ni] < 0 && label[ni] == label[start]) {
            out[ni] = next;
            comp.push_back(ni);
          }
        }
      }
      if (comp.size() < min_size && adjacent >= 0) {
        for (std::size_t i : comp) out[i] = adjacent;
      } else {
        ++next;
      }
    }

  SuperpixelMap map;
  map.labels = Image<1>(w, h);
  map.stats.assign(static_cast<std::size_t>(next), {});
  std::vector<Rgb> sq(static_cast<std::size_t>(next), Rgb::Zero());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int l = out[static_cast<std::size_t>(y) * w + x];
      map.labels.at(x, y) = static_cast<float>(l);
      SuperpixelStats& s = map.stats[l];
      const Rgb v = pixel(image, x, y);
      s.cx += x;
      s.cy += y;
      s.mean += v;
      sq[l] += v * v;
      ++s.count;
    }
  for (int l = 0; l < next; ++l) {
    SuperpixelStats& s = map.stats[l];
    s.cx /= s.count;
    s.cy /= s.count;
    s.mean /= s.count;
    s.stddev = (sq[l] / s.count - s.mean * s.mean).max(0.0).sqrt();
  }
  return map;
}

}  // namespace vlut

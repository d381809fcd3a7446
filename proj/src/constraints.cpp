#include "vlut/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "vlut/error.hpp"

namespace vlut {
namespace {

double blend(const Footprint& f, const std::vector<double>& x, std::size_t offset) {
  double s = 0.0;
  for (int k = 0; k < 8; ++k) s += f.t[k] * x[offset + f.corner[k]];
  return s;
}

void add_footprint(Gradient& g, const Footprint& f, std::size_t offset, double scale) {
  if (scale == 0.0) return;
  for (int k = 0; k < 8; ++k)
    if (f.t[k] != 0.0) g.emplace_back(static_cast<std::uint32_t>(offset + f.corner[k]), scale * f.t[k]);
}

}  // namespace

Footprint footprint(const GridLocation& loc) {
  Footprint f;
  f.corner = loc.corner;
  f.t = loc.weight;
  return f;
}

double known_color_residual(const KnownColorBlock& b, const std::vector<double>& x, std::size_t n,
                            Gradient* grad) {
  const double a = blend(b.f, x, 0), be = blend(b.f, x, n);
  if (grad) {
    add_footprint(*grad, b.f, 0, b.w * b.I0);
    add_footprint(*grad, b.f, n, b.w * b.beta_scale);
  }
  return b.w * (a * b.I0 + b.beta_scale * be - b.I);
}

double correspondence_residual(const CorrespondenceBlock& b, const std::vector<double>& x, std::size_t n,
                               Gradient* grad) {
  const double a1 = blend(b.fa, x, 0), b1 = b.beta_scale1 * blend(b.fa, x, n);
  const double a2 = blend(b.fb, x, 0), b2 = b.beta_scale2 * blend(b.fb, x, n);
  if (grad) {
    add_footprint(*grad, b.fa, 0, b.w * (b2 - b.I2));
    add_footprint(*grad, b.fa, n, -b.w * a2 * b.beta_scale1);
    add_footprint(*grad, b.fb, 0, b.w * (b.I1 - b1));
    add_footprint(*grad, b.fb, n, b.w * a1 * b.beta_scale2);
  }
  return b.w * (a2 * b.I1 - a2 * b1 - a1 * b.I2 + a1 * b2);
}

double smooth_residual(const SmoothBlock& b, const std::vector<double>& x, Gradient* grad) {
  if (grad) {
    grad->emplace_back(b.a, b.w);
    grad->emplace_back(b.b, -b.w);
  }
  return b.w * (x[b.a] - x[b.b]);
}

double pure_water_residual(const PureWaterBlock& b, const std::vector<double>& x, std::size_t n, Gradient* grad) {
  const double excess = blend(b.f, x, n) - b.I_pw;
  if (excess <= 0.0) return 0.0;
  if (grad) add_footprint(*grad, b.f, n, b.w);
  return b.w * excess;
}

double normalization_residual(double w_n, const std::vector<double>& x, std::size_t n, Gradient* grad) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  if (grad)
    for (std::size_t i = 0; i < n; ++i) grad->emplace_back(static_cast<std::uint32_t>(i), w_n);
  return w_n * (s - 1.0);
}

std::vector<PureWaterRay> pure_water_rays(const ImageRGB& img, const FrustumSpec& spec, int window) {
  std::vector<PureWaterRay> rays;
  if (img.empty()) return rays;
  for (int y = 0; y < spec.ny; ++y)
    for (int x = 0; x < spec.nx; ++x) {
      const PixelCoord px = spec.node_pixel(x, y);
      const int u = std::clamp(static_cast<int>(std::lround(px.u)), window, img.width() - 1 - window);
      const int v = std::clamp(static_cast<int>(std::lround(px.v)), window, img.height() - 1 - window);
      Rgb acc = Rgb::Zero();
      int n = 0;
      for (int dy = -window; dy <= window; ++dy)
        for (int dx = -window; dx <= window; ++dx) {
          if (!img.contains(u + dx, v + dy)) continue;
          acc += pixel(img, u + dx, v + dy);
          ++n;
        }
      rays.push_back({x, y, acc / std::max(n, 1)});
    }
  return rays;
}

std::vector<SmoothBlock> smooth_lattice(const FrustumSpec& s, const SmoothWeights& w, int c) {
  std::vector<SmoothBlock> out;
  const auto n = static_cast<std::uint32_t>(s.voxel_count());
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const auto i = static_cast<std::uint32_t>(s.flat_index(x, y, z));
        auto link = [&](int xn, int yn, int zn, double wa, double wb) {
          const auto j = static_cast<std::uint32_t>(s.flat_index(xn, yn, zn));
          out.push_back({i, j, wa});
          out.push_back({n + i, n + j, wb});
        };
        if (x + 1 < s.nx) link(x + 1, y, z, w.alpha[z][c], w.beta[z][c]);
        if (y + 1 < s.ny) link(x, y + 1, z, w.alpha[z][c], w.beta[z][c]);
        if (z + 1 < s.nz) link(x, y, z + 1, w.alpha_next[z][c], w.beta_next[z][c]);
      }
  return out;
}

SystemWeights make_weights(const LookupTable& reference) {
  SystemWeights w;
  w.stats = reference_stats(reference);
  w.smooth = smooth_weights(w.stats);
  return w;
}

ConstraintSystem build_system(const std::vector<Observation>& observations,
                              const std::vector<CorrespondencePair>& pairs,
                              const std::vector<PureWaterRay>& pure_water, const FrustumSpec& spec,
                              const SystemWeights& weights, CalibrationMode mode) {
  if (observations.empty() && pairs.empty())
    throw Error(Errc::unconstrained_system, "no known-color observations or correspondence pairs");
  spec.validate();
  ConstraintSystem sys;
  sys.spec = spec;
  sys.mode = mode;
  sys.support.assign(spec.voxel_count(), 0.0);
  auto accumulate = [&](const GridLocation& loc) {
    for (int k = 0; k < 8; ++k) sys.support[loc.corner[k]] += loc.weight[k];
  };

  if (mode == CalibrationMode::known_color) {
    for (const Observation& o : observations) {
      if (!o.known_albedo) continue;
      const GridLocation loc = locate(o.p, spec, LocateMode::clamp);
      const Footprint f = footprint(loc);
      const Rgb w = observation_weight(o.raw, o.p, weights.stats, loc, spec);
      for (int c = 0; c < 3; ++c)
        sys.channels[c].known_color.push_back({f, o.color[c], (*o.known_albedo)[c], w[c], o.beta_scale});
      accumulate(loc);
    }
  }
  for (const CorrespondencePair& pr : pairs) {
    const GridLocation la = locate(pr.a.p, spec, LocateMode::clamp);
    const GridLocation lb = locate(pr.b.p, spec, LocateMode::clamp);
    const Rgb w = correspondence_weight(observation_weight(pr.a.raw, pr.a.p, weights.stats, la, spec),
                                        observation_weight(pr.b.raw, pr.b.p, weights.stats, lb, spec));
    for (int c = 0; c < 3; ++c)
      sys.channels[c].correspondence.push_back({footprint(la), footprint(lb), pr.a.color[c], pr.b.color[c], w[c],
                                                pr.a.beta_scale, pr.b.beta_scale});
    accumulate(la);
    accumulate(lb);
  }
  const std::size_t blocks = sys.channels[0].known_color.size() + sys.channels[0].correspondence.size();
  if (blocks == 0) throw Error(Errc::unconstrained_system, "no usable constraints for the selected mode");

  for (const PureWaterRay& ray : pure_water)
    for (int z = 0; z < spec.nz; ++z) {
      const Footprint f = footprint(locate_grid(ray.x, ray.y, z, spec));
      for (int c = 0; c < 3; ++c) sys.channels[c].pure_water.push_back({f, ray.intensity[c], kPureWaterWeight});
    }
  for (int c = 0; c < 3; ++c) {
    sys.channels[c].smooth = smooth_lattice(spec, weights.smooth, c);
    if (mode == CalibrationMode::correspondence_only) {
      sys.channels[c].normalization = true;
      sys.channels[c].w_n = 10.0 / std::sqrt(static_cast<double>(spec.voxel_count()));
    }
  }
  return sys;
}

CostBreakdown channel_cost(const ChannelSystem& sys, const std::vector<double>& x, std::size_t n) {
  CostBreakdown c;
  for (const auto& b : sys.known_color) c.known_color += std::pow(known_color_residual(b, x, n), 2);
  for (const auto& b : sys.correspondence) c.correspondence += std::pow(correspondence_residual(b, x, n), 2);
  for (const auto& b : sys.smooth) c.smooth += std::pow(smooth_residual(b, x), 2);
  for (const auto& b : sys.pure_water) c.pure_water += std::pow(pure_water_residual(b, x, n), 2);
  if (sys.normalization) c.normalization = std::pow(normalization_residual(sys.w_n, x, n), 2);
  return c;
}

std::vector<double> pack_channel(const LookupTable& lut, int c) {
  const std::size_t n = lut.voxel_count();
  std::vector<double> x(2 * n);
  std::copy(lut.alpha(c).begin(), lut.alpha(c).end(), x.begin());
  std::copy(lut.beta(c).begin(), lut.beta(c).end(), x.begin() + static_cast<std::ptrdiff_t>(n));
  return x;
}

void unpack_channel(LookupTable& lut, int c, const std::vector<double>& x) {
  const std::size_t n = lut.voxel_count();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), lut.alpha(c).begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(n), x.end(), lut.beta(c).begin());
}

}  // namespace vlut

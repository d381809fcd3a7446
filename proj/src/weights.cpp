#include "vlut/weights.hpp"

#include <algorithm>
#include <cmath>

namespace vlut {
namespace {

Rgb floored(const Rgb& sum, std::size_t n) {
  if (n == 0) return Rgb::Constant(kGradientFloor);
  return (sum / static_cast<double>(n)).max(kGradientFloor);
}

}  // namespace

ReferenceStats reference_stats(const LookupTable& ref, double scene_intensity, double snr0g) {
  const FrustumSpec& s = ref.spec();
  ReferenceStats st;
  st.nz = s.nz;
  st.snr0g = snr0g;
  const std::size_t lateral = static_cast<std::size_t>(s.nx) * s.ny;
  for (int z = 0; z < s.nz; ++z) {
    Rgb ga = Rgb::Zero(), gb = Rgb::Zero(), ma = Rgb::Zero(), mb = Rgb::Zero();
    std::size_t pairs = 0;
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const std::size_t i = s.flat_index(x, y, z);
        for (int c = 0; c < 3; ++c) {
          ma[c] += ref.alpha(c)[i];
          mb[c] += ref.beta(c)[i];
        }
        for (int d = 0; d < 2; ++d) {
          const int xn = x + (d == 0), yn = y + (d == 1);
          if (xn >= s.nx || yn >= s.ny) continue;
          const std::size_t j = s.flat_index(xn, yn, z);
          for (int c = 0; c < 3; ++c) {
            ga[c] += std::abs(ref.alpha(c)[i] - ref.alpha(c)[j]);
            gb[c] += std::abs(ref.beta(c)[i] - ref.beta(c)[j]);
          }
          ++pairs;
        }
      }
    st.grad_alpha.push_back(floored(ga, pairs));
    st.grad_beta.push_back(floored(gb, pairs));
    st.mean.push_back(ma / lateral * scene_intensity + mb / lateral);
  }
  for (int z = 0; z + 1 < s.nz; ++z) {
    Rgb ga = Rgb::Zero(), gb = Rgb::Zero();
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const std::size_t i = s.flat_index(x, y, z), j = s.flat_index(x, y, z + 1);
        for (int c = 0; c < 3; ++c) {
          ga[c] += std::abs(ref.alpha(c)[i] - ref.alpha(c)[j]);
          gb[c] += std::abs(ref.beta(c)[i] - ref.beta(c)[j]);
        }
      }
    st.grad_alpha_next.push_back(floored(ga, lateral));
    st.grad_beta_next.push_back(floored(gb, lateral));
  }
  st.mean0g = st.mean.front()[1];
  return st;
}

SmoothWeights smooth_weights(const ReferenceStats& stats, double scene_intensity) {
  SmoothWeights w;
  for (int n = 0; n < stats.nz; ++n) {
    w.alpha.push_back(kSmoothScale * scene_intensity / stats.grad_alpha[n]);
    w.beta.push_back(kSmoothScale / stats.grad_beta[n]);
  }
  for (std::size_t n = 0; n < stats.grad_alpha_next.size(); ++n) {
    w.alpha_next.push_back(kSmoothScale * scene_intensity / stats.grad_alpha_next[n]);
    w.beta_next.push_back(kSmoothScale / stats.grad_beta_next[n]);
  }
  return w;
}

double snr(double intensity, double mean_n, double snr0g, double mean0g) {
  const double n_shot = 0.01 * std::sqrt(mean_n);
  const double n_const = mean_n / (snr0g * mean0g);
  const double noise = n_shot + n_const;
  return noise > 0.0 ? std::max(0.0, intensity) / noise : 0.0;
}

double observation_weight(double intensity, double distance, double voxel_distance, double mean_n, double snr0g,
                          double mean0g) {
  // 1/(e^{0.5 d})^2 written as e^{-d}
  return snr(intensity, mean_n, snr0g, mean0g) * std::exp(-distance) / voxel_distance;
}

Rgb observation_weight(const Rgb& intensity, const Point3& p, const ReferenceStats& stats, const GridLocation& gloc,
                       const FrustumSpec& spec) {
  auto [x, y, z] = gloc.nearest();
  x = std::clamp(x, 0, spec.nx - 1);
  y = std::clamp(y, 0, spec.ny - 1);
  z = std::clamp(z, 0, spec.nz - 1);
  const double dv = std::max((p - spec.voxel_center(x, y, z)).norm(), 0.05 * spec.voxel_diagonal(x, y, z));
  const double d = p.norm();
  Rgb w;
  for (int c = 0; c < 3; ++c)
    w[c] = observation_weight(intensity[c], d, dv, stats.mean[z][c], stats.snr0g, stats.mean0g);
  return w;
}

Rgb correspondence_weight(const Rgb& w1, const Rgb& w2) {
  Rgb out;
  for (int c = 0; c < 3; ++c) {
    const double den = std::hypot(w1[c], w2[c]);
    out[c] = den > 0.0 ? w1[c] * w2[c] / den : 0.0;
  }
  return out;
}

}  // namespace vlut

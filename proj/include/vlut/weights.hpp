#pragma once

#include <vector>

#include "vlut/lut.hpp"

namespace vlut {

inline constexpr double kGradientFloor = 1e-6;
inline constexpr double kSceneIntensity = 0.7;  // gray-world scene reflectance
inline constexpr double kSnrAnchor = 10.0;      // 20 dB as an amplitude ratio
inline constexpr double kSmoothScale = 0.01;
inline constexpr double kPureWaterWeight = 1.0;

struct ReferenceStats {
  int nz = 0;
  // Per slab, per channel.
  std::vector<Rgb> grad_alpha;
  std::vector<Rgb> grad_beta;
  std::vector<Rgb> mean;
  // Between slab N and N+1 (nz-1 entries).
  std::vector<Rgb> grad_alpha_next;
  std::vector<Rgb> grad_beta_next;
  double snr0g = kSnrAnchor;
  double mean0g = 0.0;  // slab 0, green
};

ReferenceStats reference_stats(const LookupTable& ref, double scene_intensity = kSceneIntensity,
                               double snr0g = kSnrAnchor);

struct SmoothWeights {
  std::vector<Rgb> alpha;       // within slab N
  std::vector<Rgb> beta;
  std::vector<Rgb> alpha_next;  // between N and N+1
  std::vector<Rgb> beta_next;
};

SmoothWeights smooth_weights(const ReferenceStats& stats, double scene_intensity = kSceneIntensity);

// Scalar form of the observation weight for one channel.
double observation_weight(double intensity, double distance, double voxel_distance, double mean_n, double snr0g,
                          double mean0g);

// Per-channel weight of an observation at camera-frame point p with intensity I.
Rgb observation_weight(const Rgb& intensity, const Point3& p, const ReferenceStats& stats, const GridLocation& gloc,
                       const FrustumSpec& spec);

Rgb correspondence_weight(const Rgb& w1, const Rgb& w2);

// Shot and constant noise terms used by the SNR model.
double snr(double intensity, double mean_n, double snr0g, double mean0g);

}  // namespace vlut

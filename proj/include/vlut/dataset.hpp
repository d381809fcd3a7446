#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vlut/geometry.hpp"
#include "vlut/lut.hpp"
#include "vlut/manifest.hpp"

namespace vlut {

// Shading-compensated color sample. color = I / cos(theta); beta_scale holds
// 1 / cos(theta) so the additive term can be compensated the same way.
struct Observation {
  Rgb color = Rgb::Zero();
  Rgb raw = Rgb::Zero();  // intensity before compensation
  Point3 p = Point3::Zero();
  int frame = -1;
  std::optional<Rgb> known_albedo;
  Rgb weight = Rgb::Ones();
  double beta_scale = 1.0;
};

struct CorrespondencePair {
  Observation a;
  Observation b;
};

struct LoadedFrame {
  std::string name;
  int index = -1;
  ImageRGB image;
  DepthMap depth;  // empty when the entry has none
  Pose pose;
  NormalMap normals;
  bool has_depth() const { return !depth.empty(); }
};

// Reads image and depth; throws load_error naming the frame on failure.
LoadedFrame load_frame(const FrameManifest& manifest, std::size_t index);

// Pixels covered by an annotation (1 inside, 0 outside).
Image<1> annotation_mask(const FrameManifest& manifest, const FrameEntry& entry, const Annotation& ann);

struct SampleOptions {
  int grid_x = 40;  // sample points across the region's bounding box
  int grid_y = 30;
  int window = 1;   // half-size of the averaging window, pixels
  double cos_min = kDefaultCosMin;
};

// Grid samples inside the annotated region. Points outside the frustum, on
// invalid depth or at grazing incidence are dropped.
std::vector<Observation> extract_known_color_samples(const LoadedFrame& frame, const Image<1>& mask,
                                                     const Rgb& albedo, const FrustumSpec& spec,
                                                     const SampleOptions& opts = {});

struct SuperpixelStats {
  double cx = 0.0;  // centroid pixel
  double cy = 0.0;
  Rgb mean = Rgb::Zero();
  Rgb stddev = Rgb::Zero();
  std::size_t count = 0;
};

struct SuperpixelMap {
  Image<1> labels;  // 0..K-1, stored as float
  std::vector<SuperpixelStats> stats;
  int label(int x, int y) const { return static_cast<int>(labels.at(x, y)); }
};

// SLIC in CIELAB x image space with a fixed iteration count.
SuperpixelMap slic_superpixels(const ImageRGB& image, int k, double compactness = 10.0, int iterations = 10);

struct CorrespondenceOptions {
  double sigma_max = 0.03;
  double depth_tolerance = 0.02;
  int window = 2;  // 5x5 patch
  double cos_min = kDefaultCosMin;
};

std::vector<CorrespondencePair> extract_correspondences(const LoadedFrame& a, const LoadedFrame& b,
                                                        const SuperpixelMap& spmap_a, const FrustumSpec& spec,
                                                        const CorrespondenceOptions& opts = {});

// Keeps at most `cap` observations per nearest voxel, preferring those closest
// to the voxel center. Order of survivors follows the input order.
std::vector<Observation> cap_per_voxel(const std::vector<Observation>& obs, const FrustumSpec& spec, int cap);
std::vector<CorrespondencePair> cap_per_voxel(const std::vector<CorrespondencePair>& pairs,
                                              const FrustumSpec& spec, int cap);

// Per-pixel mean of all pure-water frames in the manifest; empty if none.
ImageRGB mean_pure_water(const FrameManifest& manifest);

}  // namespace vlut

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "vlut/image.hpp"

namespace vlut {

using Point3 = Vec3;

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Pinhole model for undistorted, radiometrically linear images.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws invalid_input when the invariants do not hold.
  void validate() const;
  bool operator==(const CameraIntrinsics&) const = default;
};

// Camera-from-world rigid transform: p_cam = rotation * p_world + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Point3 to_camera(const Point3& world) const { return rotation * world + translation; }
  Point3 to_world(const Point3& cam) const { return rotation.transpose() * (cam - translation); }
  void validate() const;
};

// Transform taking points of camera `from` into camera `to`.
Pose relative_pose(const Pose& from, const Pose& to);

Point3 backproject(PixelCoord pixel, double depth, const CameraIntrinsics& intr);
PixelCoord project(const Point3& p, const CameraIntrinsics& intr);

// Pixel coordinates covered by the image: [-0.5, width-0.5] x [-0.5, height-0.5].
bool inside_image(PixelCoord px, const CameraIntrinsics& intr);

class NormalMap {
 public:
  NormalMap() = default;
  NormalMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  const Vec3& at(int x, int y) const { return normals_[static_cast<std::size_t>(y) * width_ + x]; }
  Vec3& at(int x, int y) { return normals_[static_cast<std::size_t>(y) * width_ + x]; }
  bool valid(int x, int y) const { return std::isfinite(at(x, y).x()); }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Vec3> normals_;
};

// Central differences over the backprojected grid, oriented toward the camera.
// Border pixels and pixels with an invalid neighbor are NaN.
NormalMap normals_from_depth(const DepthMap& depth, const CameraIntrinsics& intr);

// Interior normals copied outward onto invalid border pixels that have valid depth.
void fill_border_normals(NormalMap& normals, const DepthMap& depth);

inline constexpr double kDefaultCosMin = 0.2;

// Lambertian compensation with the light at the camera origin. Returns nullopt
// when the incidence is more grazing than cos_min.
std::optional<Rgb> shading_compensate(const Rgb& intensity, const Vec3& normal, const Point3& p,
                                      double cos_min = kDefaultCosMin);

// max(0, n . (-p/|p|))
double incidence_cosine(const Vec3& normal, const Point3& p);

}  // namespace vlut

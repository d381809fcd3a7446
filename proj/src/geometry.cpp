#include "vlut/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "vlut/error.hpp"

namespace vlut {

void CameraIntrinsics::validate() const {
  const bool ok = std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0 && width > 0 &&
                  height > 0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
  if (!ok) throw Error(Errc::invalid_input, "camera intrinsics violate fx,fy>0 and principal point in image");
}

void Pose::validate() const {
  const Eigen::Matrix3d should_be_identity = rotation * rotation.transpose();
  if (!should_be_identity.isApprox(Eigen::Matrix3d::Identity(), 1e-6) ||
      std::abs(rotation.determinant() - 1.0) > 1e-6)
    throw Error(Errc::invalid_input, "pose rotation is not a proper rotation");
  if (!translation.allFinite()) throw Error(Errc::invalid_input, "pose translation not finite");
}

Pose relative_pose(const Pose& from, const Pose& to) {
  Pose rel;
  rel.rotation = to.rotation * from.rotation.transpose();
  rel.translation = to.translation - rel.rotation * from.translation;
  return rel;
}

Point3 backproject(PixelCoord pixel, double depth, const CameraIntrinsics& intr) {
  if (!std::isfinite(depth) || depth <= 0.0)
    throw Error(Errc::invalid_input, "depth must be positive and finite, got " + std::to_string(depth));
  return {(pixel.u - intr.cx) * depth / intr.fx, (pixel.v - intr.cy) * depth / intr.fy, depth};
}

PixelCoord project(const Point3& p, const CameraIntrinsics& intr) {
  if (!(p.z() > 0.0)) throw Error(Errc::behind_camera, "point has z <= 0");
  return {intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
}

bool inside_image(PixelCoord px, const CameraIntrinsics& intr) {
  return px.u >= -0.5 && px.v >= -0.5 && px.u <= intr.width - 0.5 && px.v <= intr.height - 0.5;
}

NormalMap::NormalMap(int width, int height)
    : width_(width), height_(height),
      normals_(static_cast<std::size_t>(width) * height, Vec3::Constant(std::nan(""))) {}

NormalMap normals_from_depth(const DepthMap& depth, const CameraIntrinsics& intr) {
  const int w = depth.width();
  const int h = depth.height();
  NormalMap out(w, h);
  auto point = [&](int x, int y) {
    return Point3((x - intr.cx) * depth.at(x, y) / intr.fx, (y - intr.cy) * depth.at(x, y) / intr.fy,
                  depth.at(x, y));
  };
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      if (!depth_valid(depth.at(x, y)) || !depth_valid(depth.at(x - 1, y)) ||
          !depth_valid(depth.at(x + 1, y)) || !depth_valid(depth.at(x, y - 1)) ||
          !depth_valid(depth.at(x, y + 1)))
        continue;
      const Vec3 du = point(x + 1, y) - point(x - 1, y);
      const Vec3 dv = point(x, y + 1) - point(x, y - 1);
      Vec3 n = du.cross(dv);
      const double len = n.norm();
      if (!(len > 1e-15) || !std::isfinite(len)) continue;
      n /= len;
      if (n.dot(point(x, y)) > 0.0) n = -n;
      out.at(x, y) = n;
    }
  }
  return out;
}

void fill_border_normals(NormalMap& normals, const DepthMap& depth) {
  const int w = normals.width();
  const int h = normals.height();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (normals.valid(x, y) || !depth_valid(depth.at(x, y))) continue;
      const int sx = std::clamp(x, 1, std::max(1, w - 2));
      const int sy = std::clamp(y, 1, std::max(1, h - 2));
      if (sx < w && sy < h && normals.valid(sx, sy)) normals.at(x, y) = normals.at(sx, sy);
    }
  }
}

double incidence_cosine(const Vec3& normal, const Point3& p) {
  const double len = p.norm();
  if (!(len > 0.0)) return 0.0;
  return std::max(0.0, -normal.dot(p) / len);
}

std::optional<Rgb> shading_compensate(const Rgb& intensity, const Vec3& normal, const Point3& p,
                                      double cos_min) {
  const double cos_theta = incidence_cosine(normal, p);
  if (!std::isfinite(cos_theta) || cos_theta < cos_min || cos_theta <= 0.0) return std::nullopt;
  return intensity / cos_theta;
}

}  // namespace vlut

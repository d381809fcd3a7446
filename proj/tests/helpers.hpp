#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "vlut/geometry.hpp"
#include "vlut/lut.hpp"

namespace vlut::test {

inline CameraIntrinsics small_camera(int w = 64, int h = 48) {
  CameraIntrinsics c;
  c.width = w;
  c.height = h;
  c.fx = c.fy = w / 2.0;
  c.cx = (w - 1) / 2.0;
  c.cy = (h - 1) / 2.0;
  return c;
}

inline FrustumSpec small_spec(int nx = 4, int ny = 3, int nz = 5, double z_near = 0.5, double z_far = 2.5) {
  FrustumSpec s;
  s.z_near = z_near;
  s.z_far = z_far;
  s.nx = nx;
  s.ny = ny;
  s.nz = nz;
  s.intr = small_camera();
  return s;
}

inline LookupTable random_lut(const FrustumSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.2, 1.5), b(0.0, 0.4), n(0.0, 20.0);
  LookupTable lut(spec);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < lut.voxel_count(); ++i) {
      lut.alpha(c)[i] = a(rng);
      lut.beta(c)[i] = b(rng);
    }
  for (double& o : lut.obs_count()) o = n(rng);
  return lut;
}

// Constant-depth plane facing the camera.
inline DepthMap flat_depth(const CameraIntrinsics& c, double z) {
  return DepthMap(c.width, c.height, static_cast<float>(z));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("vlut_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace vlut::test

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vlut/geometry.hpp"

namespace vlut {

// Frustum-aligned voxel grid. Voxel nodes sit on the frustum boundary: lateral
// node 0 and nx-1 lie on the left/right image edges, slab 0 at z_near and slab
// nz-1 at z_far, with linear slab spacing in z.
struct FrustumSpec {
  double z_near = 0.5;
  double z_far = 2.5;
  int nx = 1;
  int ny = 1;
  int nz = 1;
  CameraIntrinsics intr;

  void validate() const;
  std::size_t voxel_count() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t flat_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * ny + y) * nx + x;
  }
  std::array<int, 3> unflatten(std::size_t index) const;

  // Fractional grid coordinates of a pixel / depth, unclamped.
  double grid_x(double u) const;
  double grid_y(double v) const;
  double grid_z(double z) const;

  PixelCoord node_pixel(int x, int y) const;
  double slab_depth(int z) const;
  Point3 voxel_center(int x, int y, int z) const;
  // Metric diagonal of the voxel cell around node (x,y,z).
  double voxel_diagonal(int x, int y, int z) const;

  FrustumSpec with_resolution(int new_nx, int new_ny, int new_nz) const;
  bool operator==(const FrustumSpec&) const = default;
};

struct GridLocation {
  double gx = 0.0;
  double gy = 0.0;
  double gz = 0.0;
  std::array<std::uint32_t, 8> corner{};  // flat voxel indices
  std::array<double, 8> weight{};          // trilinear weights, sum to 1

  std::array<int, 3> nearest() const {
    return {static_cast<int>(std::lround(gx)), static_cast<int>(std::lround(gy)),
            static_cast<int>(std::lround(gz))};
  }
};

enum class LocateMode { strict, clamp };

// Throws out_of_frustum in strict mode when p lies outside [z_near, z_far] or
// projects outside the image.
GridLocation locate(const Point3& p, const FrustumSpec& spec, LocateMode mode = LocateMode::strict);

// Trilinear corners/weights from already computed grid coordinates (clamped to the grid).
GridLocation locate_grid(double gx, double gy, double gz, const FrustumSpec& spec);

struct SampledParams {
  Rgb alpha;
  Rgb beta;
};

class LookupTable {
 public:
  LookupTable() = default;
  explicit LookupTable(const FrustumSpec& spec, double alpha_fill = 1.0, double beta_fill = 0.0);

  const FrustumSpec& spec() const { return spec_; }
  std::size_t voxel_count() const { return spec_.voxel_count(); }

  std::span<double> alpha(int channel) { return alpha_[channel]; }
  std::span<const double> alpha(int channel) const { return alpha_[channel]; }
  std::span<double> beta(int channel) { return beta_[channel]; }
  std::span<const double> beta(int channel) const { return beta_[channel]; }
  std::span<double> obs_count() { return obs_count_; }
  std::span<const double> obs_count() const { return obs_count_; }

  // Throws invalid_value / non_finite naming the first offending entry.
  void validate() const;

  SampledParams sample(const Point3& p, LocateMode mode = LocateMode::strict) const;
  SampledParams sample_at(const GridLocation& loc) const;
  double sample_obs_count(const GridLocation& loc) const;

  // Every new node trilinearly sampled from this table; obs_count reset to 0.
  LookupTable upsample(int new_nx, int new_ny, int new_nz) const;

  std::vector<std::uint8_t> serialize() const;
  static LookupTable deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const LookupTable&) const = default;

 private:
  FrustumSpec spec_;
  std::array<std::vector<double>, 3> alpha_;
  std::array<std::vector<double>, 3> beta_;
  std::vector<double> obs_count_;
};

void save_lut(const std::filesystem::path& path, const LookupTable& lut);
LookupTable load_lut(const std::filesystem::path& path);

}  // namespace vlut

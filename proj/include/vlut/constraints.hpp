#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "vlut/dataset.hpp"
#include "vlut/lut.hpp"
#include "vlut/weights.hpp"

namespace vlut {

enum class BlockKind { known_color, correspondence, smooth, pure_water, normalization };

enum class CalibrationMode { known_color, correspondence_only };

// Parameter layout per channel: alpha of every voxel, then beta, voxel-major.
struct Footprint {
  std::array<std::uint32_t, 8> corner{};
  std::array<double, 8> t{};
};

Footprint footprint(const GridLocation& loc);

struct KnownColorBlock {
  Footprint f;
  double I = 0.0;   // compensated observation
  double I0 = 0.0;  // reference albedo
  double w = 1.0;
  double beta_scale = 1.0;
};

struct CorrespondenceBlock {
  Footprint fa;
  Footprint fb;
  double I1 = 0.0;
  double I2 = 0.0;
  double w = 1.0;
  double beta_scale1 = 1.0;
  double beta_scale2 = 1.0;
};

struct SmoothBlock {
  std::uint32_t a = 0;  // parameter indices
  std::uint32_t b = 0;
  double w = 1.0;
};

struct PureWaterBlock {
  Footprint f;
  double I_pw = 0.0;
  double w = kPureWaterWeight;
};

// Sparse gradient of one residual: (parameter index, derivative).
using Gradient = std::vector<std::pair<std::uint32_t, double>>;

double known_color_residual(const KnownColorBlock& b, const std::vector<double>& x, std::size_t n_voxels,
                            Gradient* grad = nullptr);
double correspondence_residual(const CorrespondenceBlock& b, const std::vector<double>& x, std::size_t n_voxels,
                               Gradient* grad = nullptr);
double smooth_residual(const SmoothBlock& b, const std::vector<double>& x, Gradient* grad = nullptr);
double pure_water_residual(const PureWaterBlock& b, const std::vector<double>& x, std::size_t n_voxels,
                           Gradient* grad = nullptr);
double normalization_residual(double w_n, const std::vector<double>& x, std::size_t n_voxels,
                              Gradient* grad = nullptr);

struct ChannelSystem {
  std::vector<KnownColorBlock> known_color;
  std::vector<CorrespondenceBlock> correspondence;
  std::vector<SmoothBlock> smooth;
  std::vector<PureWaterBlock> pure_water;
  bool normalization = false;
  double w_n = 0.0;

  std::size_t residual_count() const {
    return known_color.size() + correspondence.size() + smooth.size() + pure_water.size() + (normalization ? 1 : 0);
  }
};

struct ConstraintSystem {
  FrustumSpec spec;
  CalibrationMode mode = CalibrationMode::known_color;
  std::array<ChannelSystem, 3> channels;
  std::vector<double> support;  // trilinear observation mass per voxel

  std::size_t n_voxels() const { return spec.voxel_count(); }
  std::size_t n_params() const { return 2 * spec.voxel_count(); }
};

// Pure-water bound along the ray through one voxel column.
struct PureWaterRay {
  int x = 0;
  int y = 0;
  Rgb intensity = Rgb::Zero();
};

// One ray per voxel column, intensity averaged over a (2r+1)^2 window around
// the node pixel (clamped to the image).
std::vector<PureWaterRay> pure_water_rays(const ImageRGB& pure_water, const FrustumSpec& spec, int window = 2);

// Full 6-neighbor lattice for alpha and beta of one channel.
std::vector<SmoothBlock> smooth_lattice(const FrustumSpec& spec, const SmoothWeights& w, int channel);

struct SystemWeights {
  ReferenceStats stats;
  SmoothWeights smooth;
};

SystemWeights make_weights(const LookupTable& reference);

// Throws unconstrained_system when both observations and pairs are empty.
ConstraintSystem build_system(const std::vector<Observation>& observations,
                              const std::vector<CorrespondencePair>& pairs,
                              const std::vector<PureWaterRay>& pure_water, const FrustumSpec& spec,
                              const SystemWeights& weights, CalibrationMode mode = CalibrationMode::known_color);

// Sum of squared residuals per block kind for one channel at parameters x.
struct CostBreakdown {
  double known_color = 0.0;
  double correspondence = 0.0;
  double smooth = 0.0;
  double pure_water = 0.0;
  double normalization = 0.0;
  double total() const { return known_color + correspondence + smooth + pure_water + normalization; }
};

CostBreakdown channel_cost(const ChannelSystem& sys, const std::vector<double>& x, std::size_t n_voxels);

// Parameter vector of one channel from a table and back.
std::vector<double> pack_channel(const LookupTable& lut, int channel);
void unpack_channel(LookupTable& lut, int channel, const std::vector<double>& x);

}  // namespace vlut

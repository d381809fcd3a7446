#pragma once

#include <array>
#include <optional>
#include <vector>

#include <json.hpp>

#include "vlut/constraints.hpp"
#include "vlut/simulate.hpp"

namespace vlut {

struct SolveOptions {
  std::vector<std::array<int, 3>> pyramid;  // empty: single level at the target resolution
  int max_iterations = 50;
  double lambda0 = 1e-3;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
  double tolerance = 1e-6;  // relative cost decrease
  double epsilon = 1e-6;    // positivity floor
  CalibrationMode mode = CalibrationMode::known_color;
  bool fix_beta = false;  // in-air: beta held at 0
  int voxel_cap = 50;
  // Iterative solve of large damped systems.
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 3000;
  bool use_pure_water = true;
  // Medium used to pre-render the reference table for the weights.
  sim::Medium reference = sim::reference_medium(sim::WaterParams::clear());
};

struct ChannelReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  int accepted = 0;
  int rejected = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<double> accepted_costs;  // cost after each accepted step
};

struct LevelReport {
  std::array<int, 3> dims{};
  std::array<ChannelReport, 3> channels;
  std::size_t observations = 0;
  std::size_t pairs = 0;
  std::size_t pure_water_rays = 0;
  double seconds = 0.0;
};

struct SolveReport {
  std::vector<LevelReport> levels;
  std::size_t voxels = 0;
  std::size_t supported_voxels = 0;  // obs_count > 0
  std::size_t well_supported_voxels = 0;  // obs_count >= 8
  double max_support = 0.0;
  double hinge_after_clamp = 0.0;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
};

// Levenberg-Marquardt on one level. The table's obs_count is set from the
// system's support.
std::pair<LookupTable, SolveReport> solve_level(const ConstraintSystem& system, const LookupTable& init,
                                                const SolveOptions& opts);

struct CalibrationInputs {
  std::vector<Observation> observations;
  std::vector<CorrespondencePair> pairs;
  ImageRGB pure_water;  // mean pure-water image, may be empty
};

// Level-0 initial table from the observed intensities per slab.
LookupTable initial_table(const CalibrationInputs& inputs, const FrustumSpec& spec, const SolveOptions& opts);

std::pair<LookupTable, SolveReport> calibrate_hierarchical(const CalibrationInputs& inputs,
                                                           const FrustumSpec& target, const SolveOptions& opts);

// Rescales every alpha so the anchor voxel takes the given absolute value.
LookupTable fix_scale(const LookupTable& lut, std::array<int, 3> anchor, const Rgb& alpha_abs,
                      double epsilon = 1e-6);

// Clamps beta at every node under its column's pure-water bound.
void clamp_to_pure_water(LookupTable& lut, const std::vector<PureWaterRay>& rays);

}  // namespace vlut

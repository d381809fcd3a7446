#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlut/lut.hpp"
#include "vlut/manifest.hpp"

namespace vlut {

struct PatchError {
  std::string frame;
  std::string group;
  std::string patch;
  Rgb albedo = Rgb::Zero();
  Rgb mean = Rgb::Zero();        // restored mean over the patch
  Rgb stddev = Rgb::Zero();
  Rgb error_pct = Rgb::Zero();   // |mean - albedo| in percent of full scale
  std::size_t pixels = 0;
  double coverage = -1.0;        // mean obs_count over the patch, -1 when unknown
};

struct TrendPoint {
  std::string frame;
  double distance = 0.0;
  double stddev = 0.0;  // mean over channels of the per-channel std
  // Same statistic over pixels whose table support reaches min_support; -1 without a table.
  double supported_stddev = -1.0;
  double supported_fraction = 0.0;
};

struct EvalResult {
  std::vector<PatchError> patches;
  std::vector<TrendPoint> trend;

  nlohmann::json to_json() const;
  std::string patches_csv() const;
  std::string trend_csv() const;
};

struct EvalOptions {
  int erode = 2;  // pixels trimmed from each patch border
  std::string trend_group = "trend";
  std::optional<FrameRole> role = FrameRole::test;
  // Interpolated obs_count below this counts as extrapolated in the trend.
  double min_support = 1.0;
};

// Patch statistics of one restored frame against its annotations. With depth
// and a table, each patch also reports its mean observation support.
std::vector<PatchError> evaluate_frame(const FrameManifest& manifest, const FrameEntry& entry,
                                       const ImageRGB& restored, const EvalOptions& opts = {},
                                       const LookupTable* lut = nullptr, const DepthMap* depth = nullptr);

// Std of the valid restored pixels, averaged over channels. A mask keeps only
// its nonzero pixels.
double restored_stddev(const ImageRGB& restored, const Image<1>* mask = nullptr);

// Nonzero where the table's interpolated obs_count at the pixel's depth is >= min_support.
Image<1> support_mask(const DepthMap& depth, const LookupTable& lut, double min_support);

// Reads <name>_restored.pfm (or .png) for each selected frame from restored_dir.
EvalResult evaluate(const FrameManifest& manifest, const std::filesystem::path& restored_dir,
                    const EvalOptions& opts = {}, const LookupTable* lut = nullptr);

}  // namespace vlut

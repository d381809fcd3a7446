#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "vlut/lut.hpp"
#include "vlut/manifest.hpp"

namespace vlut {

struct RestoreOptions {
  bool shading = true;  // divide the direct term by the incidence cosine
  double alpha_min = 1e-3;
  double cos_min = kDefaultCosMin;
  double coverage_min = 8.0;       // obs_count giving full coverage confidence
  double overexposed = 0.98;       // raw intensity above this gets zero confidence
};

struct RestoredFrame {
  ImageRGB albedo;      // NaN at invalid pixels
  ImageRGB confidence;  // [0,1], 0 at invalid pixels
  Image<1> valid;       // 1 valid, 0 invalid
  std::size_t invalid_pixels = 0;
};

// Per pixel: backproject, sample the table with frustum clamping and invert
// I = alpha * cos * I0 + beta.
RestoredFrame restore_image(const ImageRGB& image, const DepthMap& depth, const LookupTable& lut,
                            const RestoreOptions& opts = {});

ImageRGB confidence_map(const ImageRGB& image, const DepthMap& depth, const LookupTable& lut,
                        const RestoreOptions& opts = {});

struct BatchOptions {
  RestoreOptions restore;
  bool clamp = false;  // 16-bit PNG in [0,1] instead of float PFM
  std::optional<FrameRole> role;
};

// Restores every frame that has depth and writes <name>_restored.{pfm,png},
// <name>_confidence.png and summary.json under out_dir.
nlohmann::json restore_batch(const FrameManifest& manifest, const LookupTable& lut,
                             const std::filesystem::path& out_dir, const BatchOptions& opts = {});

}  // namespace vlut

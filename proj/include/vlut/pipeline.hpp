#pragma once

#include <array>
#include <optional>

#include "vlut/dataset.hpp"
#include "vlut/solver.hpp"

namespace vlut {

struct ExtractOptions {
  SampleOptions samples;
  int superpixels = 300;
  double compactness = 10.0;
  CorrespondenceOptions correspondence;
};

// Frustum from the manifest camera and depth range, with explicit overrides.
FrustumSpec frustum_for(const FrameManifest& manifest, std::array<int, 3> dims,
                        std::optional<double> z_near = std::nullopt, std::optional<double> z_far = std::nullopt);

// Known-color samples (known_color mode) or pairwise correspondences between
// calibration frames (correspondence_only mode), plus the mean pure-water image.
CalibrationInputs collect_inputs(const FrameManifest& manifest, const FrustumSpec& spec, CalibrationMode mode,
                                 const ExtractOptions& opts = {});

}  // namespace vlut

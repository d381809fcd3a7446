#include "vlut/pipeline.hpp"

#include "vlut/error.hpp"
#include "vlut/parallel.hpp"

namespace vlut {

FrustumSpec frustum_for(const FrameManifest& manifest, std::array<int, 3> dims, std::optional<double> z_near,
                        std::optional<double> z_far) {
  FrustumSpec s;
  s.intr = manifest.camera;
  const auto zn = z_near ? z_near : manifest.z_near;
  const auto zf = z_far ? z_far : manifest.z_far;
  if (!zn || !zf) throw Error(Errc::invalid_input, "depth range missing: set frustum in the manifest or pass it");
  s.z_near = *zn;
  s.z_far = *zf;
  s.nx = dims[0];
  s.ny = dims[1];
  s.nz = dims[2];
  s.validate();
  return s;
}

CalibrationInputs collect_inputs(const FrameManifest& manifest, const FrustumSpec& spec, CalibrationMode mode,
                                 const ExtractOptions& opts) {
  CalibrationInputs in;
  std::vector<LoadedFrame> frames;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameEntry& e = manifest.frames[i];
    if (e.role != FrameRole::calibration) continue;
    LoadedFrame f = load_frame(manifest, i);
    if (mode == CalibrationMode::known_color) {
      for (const Annotation& ann : e.annotations) {
        const auto obs =
            extract_known_color_samples(f, annotation_mask(manifest, e, ann), ann.albedo, spec, opts.samples);
        in.observations.insert(in.observations.end(), obs.begin(), obs.end());
      }
    } else {
      frames.push_back(std::move(f));
    }
  }
  if (mode == CalibrationMode::correspondence_only) {
    std::vector<SuperpixelMap> maps(frames.size());
    parallel_for(static_cast<int>(frames.size()), [&](int i) {
      maps[i] = slic_superpixels(frames[i].image, opts.superpixels, opts.compactness);
    });
    for (std::size_t a = 0; a < frames.size(); ++a)
      for (std::size_t b = a + 1; b < frames.size(); ++b) {
        const auto pairs = extract_correspondences(frames[a], frames[b], maps[a], spec, opts.correspondence);
        in.pairs.insert(in.pairs.end(), pairs.begin(), pairs.end());
      }
  }
  in.pure_water = mean_pure_water(manifest);
  return in;
}

}  // namespace vlut

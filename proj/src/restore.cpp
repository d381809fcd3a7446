#include "vlut/restore.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

#include "vlut/dataset.hpp"
#include "vlut/error.hpp"
#include "vlut/image_io.hpp"
#include "vlut/parallel.hpp"
#include "vlut/weights.hpp"

namespace vlut {
namespace {

void check_dims(const ImageRGB& image, const DepthMap& depth, const LookupTable& lut) {
  const CameraIntrinsics& cam = lut.spec().intr;
  if (image.width() != cam.width || image.height() != cam.height)
    throw Error(Errc::invalid_input, "image is " + std::to_string(image.width()) + "x" +
                                         std::to_string(image.height()) + ", table camera is " +
                                         std::to_string(cam.width) + "x" + std::to_string(cam.height));
  if (!depth.empty() && (depth.width() != image.width() || depth.height() != image.height()))
    throw Error(Errc::invalid_input, "depth and image sizes differ");
}

NormalMap normals_for(const DepthMap& depth, const CameraIntrinsics& cam) {
  NormalMap n = normals_from_depth(depth, cam);
  fill_border_normals(n, depth);
  return n;
}

ImageRGB confidence_impl(const ImageRGB& image, const DepthMap& depth, const NormalMap& normals,
                         const LookupTable& lut, const RestoreOptions& opts) {
  const FrustumSpec& spec = lut.spec();
  const ReferenceStats st = reference_stats(lut);
  const double snr_ref = snr(st.mean0g, st.mean.front()[1], st.snr0g, st.mean0g);
  ImageRGB conf(image.width(), image.height());
  parallel_for(image.height(), [&](int y) {
    for (int x = 0; x < image.width(); ++x) {
      const float z = depth.empty() ? kInvalid : depth.at(x, y);
      if (!depth_valid(z) || !normals.valid(x, y)) continue;
      const Point3 p = backproject({static_cast<double>(x), static_cast<double>(y)}, z, spec.intr);
      const GridLocation loc = locate(p, spec, LocateMode::clamp);
      const int slab = std::clamp(loc.nearest()[2], 0, spec.nz - 1);
      const double q_cov = std::clamp(lut.sample_obs_count(loc) / opts.coverage_min, 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        const double I = image.at(x, y, c);
        const double q_snr =
            snr_ref > 0.0 ? std::clamp(snr(I, st.mean[slab][c], st.snr0g, st.mean0g) / snr_ref, 0.0, 1.0) : 0.0;
        const double q_exp = I > opts.overexposed ? 0.0 : 1.0;
        conf.at(x, y, c) = static_cast<float>(q_snr * q_cov * q_exp);
      }
    }
  });
  return conf;
}

}  // namespace

RestoredFrame restore_image(const ImageRGB& image, const DepthMap& depth, const LookupTable& lut,
                            const RestoreOptions& opts) {
  check_dims(image, depth, lut);
  const FrustumSpec& spec = lut.spec();
  const int w = image.width(), h = image.height();
  RestoredFrame out;
  out.albedo = ImageRGB(w, h, kInvalid);
  out.valid = Image<1>(w, h, 0.0f);
  const NormalMap normals = depth.empty() ? NormalMap(w, h) : normals_for(depth, spec.intr);
  parallel_for(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const float z = depth.empty() ? kInvalid : depth.at(x, y);
      if (!depth_valid(z)) continue;
      const Point3 p = backproject({static_cast<double>(x), static_cast<double>(y)}, z, spec.intr);
      double cos_t = 1.0;
      if (opts.shading) {
        if (!normals.valid(x, y)) continue;
        cos_t = incidence_cosine(normals.at(x, y), p);
        if (cos_t < opts.cos_min) continue;
      }
      const SampledParams s = lut.sample(p, LocateMode::clamp);
      if ((s.alpha < opts.alpha_min).any()) continue;
      set_pixel(out.albedo, x, y, (pixel(image, x, y) - s.beta) / (s.alpha * cos_t));
      out.valid.at(x, y) = 1.0f;
    }
  });
  for (float v : out.valid.data())
    if (v == 0.0f) ++out.invalid_pixels;
  out.confidence = confidence_impl(image, depth, normals, lut, opts);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (out.valid.at(x, y) == 0.0f) set_pixel(out.confidence, x, y, Rgb::Zero());
  return out;
}

ImageRGB confidence_map(const ImageRGB& image, const DepthMap& depth, const LookupTable& lut,
                        const RestoreOptions& opts) {
  return restore_image(image, depth, lut, opts).confidence;
}

nlohmann::json restore_batch(const FrameManifest& manifest, const LookupTable& lut,
                             const std::filesystem::path& out_dir, const BatchOptions& opts) {
  using nlohmann::json;
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  std::filesystem::create_directories(out_dir);
  json frames = json::array();
  json skipped = json::array();
  std::size_t restored = 0, invalid_total = 0, pixel_total = 0;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameEntry& e = manifest.frames[i];
    if (opts.role && e.role != *opts.role) continue;
    if (e.role == FrameRole::pure_water && !opts.role) continue;
    if (!e.depth) {
      std::cerr << "warning: frame " << e.name << " has no depth map, skipped\n";
      skipped.push_back({{"name", e.name}, {"reason", "no depth map"}});
      continue;
    }
    const auto tf = Clock::now();
    const LoadedFrame f = load_frame(manifest, i);
    RestoredFrame r = restore_image(f.image, f.depth, lut, opts.restore);
    if (opts.clamp) {
      ImageRGB c = r.albedo;
      for (float& v : c.data()) v = std::isfinite(v) ? std::clamp(v, 0.0f, 1.0f) : 0.0f;
      io::write_png(out_dir / (e.name + "_restored.png"), c, 16);
    } else {
      io::write_pfm(out_dir / (e.name + "_restored.pfm"), r.albedo);
    }
    io::write_png(out_dir / (e.name + "_confidence.png"), r.confidence, 8);
    ++restored;
    invalid_total += r.invalid_pixels;
    pixel_total += r.valid.pixel_count();
    frames.push_back({{"name", e.name},
                      {"invalid_pixels", r.invalid_pixels},
                      {"pixels", r.valid.pixel_count()},
                      {"seconds", std::chrono::duration<double>(Clock::now() - tf).count()}});
  }
  json summary = {{"restored", restored},
                  {"skipped", skipped},
                  {"frames", frames},
                  {"invalid_pixels", invalid_total},
                  {"invalid_fraction", pixel_total ? static_cast<double>(invalid_total) / pixel_total : 0.0},
                  {"seconds", std::chrono::duration<double>(Clock::now() - t0).count()}};
  std::ofstream(out_dir / "summary.json") << summary.dump(2) << "\n";
  return summary;
}

}  // namespace vlut

#include "vlut/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vlut/error.hpp"
#include "vlut/image_io.hpp"

namespace vlut {
namespace {

struct WindowStats {
  Rgb mean = Rgb::Zero();
  Rgb stddev = Rgb::Zero();
  int count = 0;
};

// Mean/std over the (2r+1)^2 window; fails if any pixel is outside the image
// or (when given) outside the mask.
std::optional<WindowStats> window_stats(const ImageRGB& img, int x, int y, int r, const Image<1>* mask = nullptr) {
  WindowStats s;
  Rgb sq = Rgb::Zero();
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int xx = x + dx, yy = y + dy;
      if (!img.contains(xx, yy)) return std::nullopt;
      if (mask && mask->at(xx, yy) == 0.0f) return std::nullopt;
      const Rgb v = pixel(img, xx, yy);
      s.mean += v;
      sq += v * v;
      ++s.count;
    }
  s.mean /= s.count;
  s.stddev = (sq / s.count - s.mean * s.mean).max(0.0).sqrt();
  return s;
}

// Builds a compensated observation at pixel (x, y) from a window-averaged color.
std::optional<Observation> make_observation(const LoadedFrame& f, int x, int y, const Rgb& color,
                                            const FrustumSpec& spec, double cos_min) {
  const float z = f.depth.at(x, y);
  if (!depth_valid(z) || !f.normals.valid(x, y)) return std::nullopt;
  const Point3 p = backproject({static_cast<double>(x), static_cast<double>(y)}, z, spec.intr);
  if (p.z() < spec.z_near || p.z() > spec.z_far) return std::nullopt;
  const auto comp = shading_compensate(color, f.normals.at(x, y), p, cos_min);
  if (!comp) return std::nullopt;
  Observation o;
  o.raw = color;
  o.color = *comp;
  o.p = p;
  o.frame = f.index;
  o.beta_scale = 1.0 / incidence_cosine(f.normals.at(x, y), p);
  return o;
}

double center_distance(const Point3& p, const FrustumSpec& spec) {
  const GridLocation loc = locate(p, spec, LocateMode::clamp);
  const auto [x, y, z] = loc.nearest();
  return (p - spec.voxel_center(x, y, z)).norm();
}

std::size_t nearest_voxel(const Point3& p, const FrustumSpec& spec) {
  const auto [x, y, z] = locate(p, spec, LocateMode::clamp).nearest();
  return spec.flat_index(std::clamp(x, 0, spec.nx - 1), std::clamp(y, 0, spec.ny - 1), std::clamp(z, 0, spec.nz - 1));
}

// Indices of survivors after the per-voxel cap, in input order.
std::vector<std::size_t> capped_indices(const std::vector<Point3>& points, const FrustumSpec& spec, int cap) {
  std::map<std::size_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < points.size(); ++i) buckets[nearest_voxel(points[i], spec)].push_back(i);
  std::vector<std::size_t> keep;
  for (auto& [voxel, members] : buckets) {
    if (static_cast<int>(members.size()) > cap) {
      std::vector<double> dist(members.size());
      for (std::size_t k = 0; k < members.size(); ++k) dist[k] = center_distance(points[members[k]], spec);
      std::vector<std::size_t> order(members.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
      std::vector<std::size_t> chosen;
      for (int k = 0; k < cap; ++k) chosen.push_back(members[order[k]]);
      members = std::move(chosen);
    }
    keep.insert(keep.end(), members.begin(), members.end());
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

LoadedFrame load_frame(const FrameManifest& manifest, std::size_t index) {
  const FrameEntry& e = manifest.frames.at(index);
  LoadedFrame f;
  f.name = e.name;
  f.index = static_cast<int>(index);
  f.pose = e.pose;
  try {
    f.image = io::read_image_rgb(manifest.resolve(e.image));
    if (e.gamma == Gamma::srgb) io::linearize_srgb(f.image);
    if (e.depth) {
      f.depth = io::read_pfm_gray(manifest.resolve(*e.depth));
      for (float& z : f.depth.data())
        if (!depth_valid(z)) z = kInvalid;
    }
  } catch (const Error& err) {
    throw Error(Errc::load_error, "frame " + e.name + ": " + err.what());
  }
  if (f.image.width() != manifest.camera.width || f.image.height() != manifest.camera.height)
    throw Error(Errc::load_error, "frame " + e.name + ": image is " + std::to_string(f.image.width()) + "x" +
                                      std::to_string(f.image.height()) + ", camera expects " +
                                      std::to_string(manifest.camera.width) + "x" +
                                      std::to_string(manifest.camera.height));
  if (f.has_depth()) {
    if (f.depth.width() != f.image.width() || f.depth.height() != f.image.height())
      throw Error(Errc::load_error, "frame " + e.name + ": depth and image sizes differ");
    f.normals = normals_from_depth(f.depth, manifest.camera);
    fill_border_normals(f.normals, f.depth);
  }
  return f;
}

Image<1> annotation_mask(const FrameManifest& manifest, const FrameEntry& entry, const Annotation& ann) {
  const int w = manifest.camera.width, h = manifest.camera.height;
  if (!ann.mask) return Image<1>(w, h, 1.0f);
  Image<1> raw;
  try {
    raw = io::read_png_labels(manifest.resolve(*ann.mask));
  } catch (const Error& err) {
    throw Error(Errc::load_error, "frame " + entry.name + ": " + err.what());
  }
  if (raw.width() != w || raw.height() != h)
    throw Error(Errc::load_error, "frame " + entry.name + ": mask size differs from the camera");
  Image<1> mask(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const float v = raw.at(x, y);
      mask.at(x, y) = (ann.label ? v == static_cast<float>(*ann.label) : v != 0.0f) ? 1.0f : 0.0f;
    }
  return mask;
}

std::vector<Observation> extract_known_color_samples(const LoadedFrame& frame, const Image<1>& mask,
                                                     const Rgb& albedo, const FrustumSpec& spec,
                                                     const SampleOptions& opts) {
  std::vector<Observation> out;
  if (!frame.has_depth()) return out;
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x)
      if (mask.at(x, y) != 0.0f) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return out;
  const double sx = static_cast<double>(x1 - x0 + 1) / opts.grid_x;
  const double sy = static_cast<double>(y1 - y0 + 1) / opts.grid_y;
  for (int j = 0; j < opts.grid_y; ++j)
    for (int i = 0; i < opts.grid_x; ++i) {
      const int x = x0 + static_cast<int>((i + 0.5) * sx);
      const int y = y0 + static_cast<int>((j + 0.5) * sy);
      if (!mask.contains(x, y) || mask.at(x, y) == 0.0f) continue;
      const auto ws = window_stats(frame.image, x, y, opts.window, &mask);
      if (!ws) continue;
      auto o = make_observation(frame, x, y, ws->mean, spec, opts.cos_min);
      if (!o) continue;
      o->known_albedo = albedo;
      out.push_back(*o);
    }
  return out;
}

std::vector<CorrespondencePair> extract_correspondences(const LoadedFrame& a, const LoadedFrame& b,
                                                        const SuperpixelMap& spmap_a, const FrustumSpec& spec,
                                                        const CorrespondenceOptions& opts) {
  std::vector<CorrespondencePair> out;
  if (!a.has_depth() || !b.has_depth()) return out;
  const Pose rel = relative_pose(a.pose, b.pose);
  for (std::size_t k = 0; k < spmap_a.stats.size(); ++k) {
    const SuperpixelStats& s = spmap_a.stats[k];
    if (s.count == 0 || (s.stddev > opts.sigma_max).any()) continue;
    const int xa = static_cast<int>(std::lround(s.cx));
    const int ya = static_cast<int>(std::lround(s.cy));
    if (!a.image.contains(xa, ya) || spmap_a.label(xa, ya) != static_cast<int>(k)) continue;
    const auto wa = window_stats(a.image, xa, ya, opts.window);
    if (!wa || (wa->stddev > opts.sigma_max).any()) continue;
    const float za = a.depth.at(xa, ya);
    if (!depth_valid(za)) continue;
    const Point3 pa = backproject({static_cast<double>(xa), static_cast<double>(ya)}, za, spec.intr);
    const Point3 pb_pred = rel.to_camera(pa);
    if (pb_pred.z() <= 0.0) continue;
    const PixelCoord q = project(pb_pred, spec.intr);
    if (!inside_image(q, spec.intr)) continue;
    const int xb = static_cast<int>(std::lround(q.u));
    const int yb = static_cast<int>(std::lround(q.v));
    if (!b.image.contains(xb, yb)) continue;
    const float zb = b.depth.at(xb, yb);
    if (!depth_valid(zb) || std::abs(pb_pred.z() - zb) / zb >= opts.depth_tolerance) continue;
    const auto wb = window_stats(b.image, xb, yb, opts.window);
    if (!wb || (wb->stddev > opts.sigma_max).any()) continue;
    auto oa = make_observation(a, xa, ya, wa->mean, spec, opts.cos_min);
    auto ob = make_observation(b, xb, yb, wb->mean, spec, opts.cos_min);
    if (!oa || !ob) continue;
    out.push_back({*oa, *ob});
  }
  return out;
}

std::vector<Observation> cap_per_voxel(const std::vector<Observation>& obs, const FrustumSpec& spec, int cap) {
  std::vector<Point3> pts;
  pts.reserve(obs.size());
  for (const auto& o : obs) pts.push_back(o.p);
  std::vector<Observation> out;
  for (std::size_t i : capped_indices(pts, spec, cap)) out.push_back(obs[i]);
  return out;
}

std::vector<CorrespondencePair> cap_per_voxel(const std::vector<CorrespondencePair>& pairs,
                                              const FrustumSpec& spec, int cap) {
  std::vector<Point3> pts;
  pts.reserve(pairs.size());
  for (const auto& pr : pairs) pts.push_back(pr.a.p);
  std::vector<CorrespondencePair> out;
  for (std::size_t i : capped_indices(pts, spec, cap)) out.push_back(pairs[i]);
  return out;
}

ImageRGB mean_pure_water(const FrameManifest& manifest) {
  ImageRGB acc;
  int n = 0;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    if (manifest.frames[i].role != FrameRole::pure_water) continue;
    ImageRGB img;
    try {
      img = io::read_image_rgb(manifest.resolve(manifest.frames[i].image));
    } catch (const Error& err) {
      throw Error(Errc::load_error, "frame " + manifest.frames[i].name + ": " + err.what());
    }
    if (manifest.frames[i].gamma == Gamma::srgb) io::linearize_srgb(img);
    if (img.width() != manifest.camera.width || img.height() != manifest.camera.height)
      throw Error(Errc::load_error, "frame " + manifest.frames[i].name + ": image size differs from the camera");
    if (acc.empty()) acc = ImageRGB(img.width(), img.height());
    for (std::size_t k = 0; k < acc.data().size(); ++k) acc.data()[k] += img.data()[k];
    ++n;
  }
  for (float& v : acc.data()) v /= static_cast<float>(n);
  return acc;
}

}  // namespace vlut

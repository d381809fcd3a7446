#include "vlut/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vlut/dataset.hpp"
#include "vlut/error.hpp"
#include "vlut/image_io.hpp"

namespace vlut {
namespace {

Image<1> erode(const Image<1>& mask, int r) {
  if (r <= 0) return mask;
  Image<1> out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      bool inside = mask.at(x, y) != 0.0f;
      for (int dy = -r; dy <= r && inside; ++dy)
        for (int dx = -r; dx <= r && inside; ++dx)
          inside = mask.contains(x + dx, y + dy) && mask.at(x + dx, y + dy) != 0.0f;
      out.at(x, y) = inside ? 1.0f : 0.0f;
    }
  return out;
}

bool finite_pixel(const ImageRGB& img, int x, int y) {
  return std::isfinite(img.at(x, y, 0)) && std::isfinite(img.at(x, y, 1)) && std::isfinite(img.at(x, y, 2));
}

}  // namespace

std::vector<PatchError> evaluate_frame(const FrameManifest& manifest, const FrameEntry& entry,
                                       const ImageRGB& restored, const EvalOptions& opts, const LookupTable* lut,
                                       const DepthMap* depth) {
  std::vector<PatchError> out;
  for (const Annotation& ann : entry.annotations) {
    const Image<1> mask = erode(annotation_mask(manifest, entry, ann), opts.erode);
    PatchError pe;
    pe.frame = entry.name;
    pe.group = entry.group;
    pe.patch = ann.name.empty() ? "patch_" + std::to_string(out.size()) : ann.name;
    pe.albedo = ann.albedo;
    Rgb sum = Rgb::Zero(), sq = Rgb::Zero();
    double support = 0.0;
    std::size_t support_n = 0;
    for (int y = 0; y < mask.height(); ++y)
      for (int x = 0; x < mask.width(); ++x) {
        if (mask.at(x, y) == 0.0f || !finite_pixel(restored, x, y)) continue;
        const Rgb v = pixel(restored, x, y);
        sum += v;
        sq += v * v;
        ++pe.pixels;
        if (lut && depth && depth_valid(depth->at(x, y))) {
          const Point3 p = backproject({static_cast<double>(x), static_cast<double>(y)}, depth->at(x, y),
                                       lut->spec().intr);
          support += lut->sample_obs_count(locate(p, lut->spec(), LocateMode::clamp));
          ++support_n;
        }
      }
    if (pe.pixels == 0) continue;
    pe.mean = sum / pe.pixels;
    pe.stddev = (sq / pe.pixels - pe.mean * pe.mean).max(0.0).sqrt();
    pe.error_pct = (pe.mean - pe.albedo).abs() * 100.0;
    if (support_n > 0) pe.coverage = support / support_n;
    out.push_back(pe);
  }
  return out;
}

double restored_stddev(const ImageRGB& restored, const Image<1>* mask) {
  Rgb sum = Rgb::Zero(), sq = Rgb::Zero();
  std::size_t n = 0;
  for (int y = 0; y < restored.height(); ++y)
    for (int x = 0; x < restored.width(); ++x) {
      if (!finite_pixel(restored, x, y)) continue;
      if (mask && mask->at(x, y) == 0.0f) continue;
      const Rgb v = pixel(restored, x, y);
      sum += v;
      sq += v * v;
      ++n;
    }
  if (n == 0) return 0.0;
  const Rgb mean = sum / n;
  return (sq / n - mean * mean).max(0.0).sqrt().mean();
}

Image<1> support_mask(const DepthMap& depth, const LookupTable& lut, double min_support) {
  Image<1> mask(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      const float z = depth.at(x, y);
      if (!depth_valid(z)) continue;
      const Point3 p = backproject({static_cast<double>(x), static_cast<double>(y)}, z, lut.spec().intr);
      mask.at(x, y) = lut.sample_obs_count(locate(p, lut.spec(), LocateMode::clamp)) >= min_support ? 1.0f : 0.0f;
    }
  return mask;
}

EvalResult evaluate(const FrameManifest& manifest, const std::filesystem::path& restored_dir,
                    const EvalOptions& opts, const LookupTable* lut) {
  EvalResult res;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameEntry& e = manifest.frames[i];
    if (opts.role && e.role != *opts.role) continue;
    if (e.role == FrameRole::pure_water) continue;
    std::filesystem::path path = restored_dir / (e.name + "_restored.pfm");
    if (!std::filesystem::exists(path)) path = restored_dir / (e.name + "_restored.png");
    if (!std::filesystem::exists(path)) continue;
    const ImageRGB restored = io::read_image_rgb(path);
    DepthMap depth;
    if (lut && e.depth) depth = load_frame(manifest, i).depth;
    if (e.group == opts.trend_group) {
      TrendPoint tp{e.name, e.distance.value_or(0.0), restored_stddev(restored)};
      if (!depth.empty()) {
        const Image<1> mask = support_mask(depth, *lut, opts.min_support);
        std::size_t kept = 0;
        for (float v : mask.data()) kept += v != 0.0f;
        tp.supported_fraction = static_cast<double>(kept) / static_cast<double>(mask.data().size());
        if (kept > 0) tp.supported_stddev = restored_stddev(restored, &mask);
      }
      res.trend.push_back(tp);
      continue;
    }
    auto patches = evaluate_frame(manifest, e, restored, opts, lut, depth.empty() ? nullptr : &depth);
    res.patches.insert(res.patches.end(), patches.begin(), patches.end());
  }
  std::stable_sort(res.trend.begin(), res.trend.end(),
                   [](const TrendPoint& a, const TrendPoint& b) { return a.distance < b.distance; });
  return res;
}

nlohmann::json EvalResult::to_json() const {
  using nlohmann::json;
  auto arr = [](const Rgb& v) { return json::array({v[0], v[1], v[2]}); };
  json pj = json::array();
  for (const PatchError& p : patches) {
    json j = {{"frame", p.frame}, {"group", p.group}, {"patch", p.patch},    {"albedo", arr(p.albedo)},
              {"mean", arr(p.mean)}, {"std", arr(p.stddev)}, {"error_pct", arr(p.error_pct)}, {"pixels", p.pixels}};
    if (p.coverage >= 0.0) j["coverage"] = p.coverage;
    pj.push_back(j);
  }
  json tj = json::array();
  for (const TrendPoint& t : trend) {
    json j = {{"frame", t.frame}, {"distance", t.distance}, {"std", t.stddev}};
    if (t.supported_stddev >= 0.0) {
      j["supported_std"] = t.supported_stddev;
      j["supported_fraction"] = t.supported_fraction;
    }
    tj.push_back(j);
  }
  return {{"patches", pj}, {"trend", tj}};
}

std::string EvalResult::patches_csv() const {
  std::ostringstream os;
  os << "frame,group,patch,err_r,err_g,err_b,mean_r,mean_g,mean_b,albedo_r,albedo_g,albedo_b,pixels,coverage\n";
  for (const PatchError& p : patches)
    os << p.frame << ',' << p.group << ',' << p.patch << ',' << p.error_pct[0] << ',' << p.error_pct[1] << ','
       << p.error_pct[2] << ',' << p.mean[0] << ',' << p.mean[1] << ',' << p.mean[2] << ',' << p.albedo[0] << ','
       << p.albedo[1] << ',' << p.albedo[2] << ',' << p.pixels << ',' << p.coverage << '\n';
  return os.str();
}

std::string EvalResult::trend_csv() const {
  std::ostringstream os;
  os << "frame,distance,std,supported_std,supported_fraction\n";
  for (const TrendPoint& t : trend)
    os << t.frame << ',' << t.distance << ',' << t.stddev << ',' << t.supported_stddev << ',' << t.supported_fraction
       << '\n';
  return os.str();
}

}  // namespace vlut

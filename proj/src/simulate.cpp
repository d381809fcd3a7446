#include "vlut/simulate.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "vlut/error.hpp"
#include "vlut/image_io.hpp"
#include "vlut/parallel.hpp"

namespace vlut::sim {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kPhase = 1.0 / (4.0 * kPi);
constexpr double kTailAttenuation = 1e-4;
constexpr int kTailSamples = 256;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_hash(std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(splitmix64(a ^ splitmix64(b)) >> 11) * (1.0 / 9007199254740992.0);
}

// Radiance scattered toward the camera at distance s along the view ray, per
// unit length, including the return-path attenuation e^{-eta s}.
Rgb scatter_density(const Vec3& dir, double s, const Medium& medium) {
  const Point3 q = dir * s;
  Rgb sum = Rgb::Zero();
  for (const LightSource& l : medium.lights) {
    const Vec3 d = q - l.position;
    const double r2 = d.squaredNorm();
    if (!(r2 > 0.0)) continue;
    const double r = std::sqrt(r2);
    sum += l.radiant_intensity_toward(q) * (-medium.water.attenuation * (r + s)).exp() / r2;
  }
  return sum * medium.water.scattering * kPhase;
}

// Trapezoid on the fixed grid s_i = L (i/n)^2 from the camera, fine where the
// light is close, with one partial interval at b. Sharing the grid across
// distances keeps the integral non-decreasing in b.
constexpr double kStepLength = 2.5;

Rgb integrate_segment(const Vec3& dir, double a, double b, const Medium& medium, int n) {
  if (!(b > a)) return Rgb::Zero();
  auto node = [&](long i) {
    const double t = static_cast<double>(i) / n;
    return kStepLength * t * t;
  };
  Rgb acc = Rgb::Zero();
  double s0 = a;
  Rgb f0 = scatter_density(dir, a, medium);
  for (long i = static_cast<long>(std::floor(n * std::sqrt(a / kStepLength))) + 1;; ++i) {
    const double s1 = std::min(b, node(i));
    if (s1 <= s0) continue;
    const Rgb f1 = scatter_density(dir, s1, medium);
    acc += 0.5 * (f0 + f1) * (s1 - s0);
    if (s1 >= b) break;
    s0 = s1;
    f0 = f1;
  }
  return acc;
}

double tail_distance(const Medium& medium) {
  double far = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double eta = medium.water.attenuation[c];
    if (eta > 0.0) far = std::max(far, std::log(1.0 / kTailAttenuation) / eta);
  }
  return far;
}

Rgb integrate_tail(const Vec3& dir, double from, const Medium& medium) {
  const double to = tail_distance(medium);
  if (!(to > from) || from <= 0.0) return Rgb::Zero();
  const double ratio = to / from;
  Rgb acc = Rgb::Zero();
  double prev_s = from;
  Rgb prev_f = scatter_density(dir, from, medium);
  for (int i = 1; i <= kTailSamples; ++i) {
    const double s = from * std::pow(ratio, static_cast<double>(i) / kTailSamples);
    const Rgb f = scatter_density(dir, s, medium);
    acc += 0.5 * (f + prev_f) * (s - prev_s);
    prev_s = s;
    prev_f = f;
  }
  return acc;
}

Vec3 pixel_ray(const CameraIntrinsics& cam, double u, double v) {
  return {(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0};
}

}  // namespace

void WaterParams::validate() const {
  if ((attenuation < 0.0).any() || (scattering < 0.0).any() || (scattering > attenuation).any())
    throw Error(Errc::invalid_input, "water parameters need 0 <= b <= eta per channel");
}

WaterParams WaterParams::clear() {
  WaterParams w;
  w.attenuation = {0.25, 0.06, 0.07};
  w.scattering = 0.5 * w.attenuation;
  return w;
}

WaterParams WaterParams::turbid() {
  WaterParams w;
  w.attenuation = {0.9, 0.7, 0.8};
  w.scattering = 0.5 * w.attenuation;
  return w;
}

Rgb LightSource::radiant_intensity_toward(const Point3& p) const {
  if (spot_exponent <= 0.0) return intensity;
  const Vec3 d = (p - position).normalized();
  const double c = std::max(0.0, d.dot(direction.normalized()));
  return intensity * std::pow(c, spot_exponent);
}

Rgb alpha_field(const Point3& p, const Medium& medium) {
  const double dist = p.norm();
  if (medium.mode == MediumMode::uniform_shallow)
    return medium.irradiance / kPi * (-medium.water.attenuation * dist).exp();
  Rgb sum = Rgb::Zero();
  for (const LightSource& l : medium.lights) {
    const double r2 = (p - l.position).squaredNorm();
    if (!(r2 > 0.0)) continue;
    const double r = std::sqrt(r2);
    sum += l.radiant_intensity_toward(p) * (-medium.water.attenuation * (r + dist)).exp() / (kPi * r2);
  }
  return sum;
}

Rgb beta_field(const Point3& p, const Medium& medium, int samples) {
  const double dist = p.norm();
  if (medium.mode == MediumMode::uniform_shallow)
    return medium.backscatter_infinity * (1.0 - (-medium.water.attenuation * dist).exp());
  if (medium.mode == MediumMode::in_air || !(dist > 0.0)) return Rgb::Zero();
  return integrate_segment(p / dist, 0.0, dist, medium, samples);
}

Rgb pure_water_radiance(const Vec3& direction, const Medium& medium, double split_distance, int samples) {
  if (medium.mode == MediumMode::uniform_shallow) return medium.backscatter_infinity;
  if (medium.mode == MediumMode::in_air) return Rgb::Zero();
  const Vec3 dir = direction.normalized();
  const double far = tail_distance(medium);
  const double split = far > 0.0 ? std::min(split_distance, far) : split_distance;
  return integrate_segment(dir, 0.0, split, medium, samples) + integrate_tail(dir, split, medium);
}

std::pair<Rgb, int> AlbedoPattern::evaluate(double x, double y) const {
  switch (kind) {
    case PatternKind::uniform:
      return {color, 1};
    case PatternKind::color_checker: {
      const double x0 = -cols * cell / 2.0;
      const double y0 = -rows * cell / 2.0;
      const double fx = (x - x0) / cell;
      const double fy = (y - y0) / cell;
      if (fx < 0.0 || fy < 0.0 || fx >= cols || fy >= rows) return {color, 0};
      const int ix = static_cast<int>(fx);
      const int iy = static_cast<int>(fy);
      const double lx = (fx - ix) * cell;
      const double ly = (fy - iy) * cell;
      if (lx < gap || ly < gap || lx > cell - gap || ly > cell - gap) return {color, 0};
      const int idx = iy * cols + ix;
      return {palette.at(static_cast<std::size_t>(idx)), idx + 1};
    }
    case PatternKind::chessboard: {
      const double x0 = -cols * cell / 2.0;
      const double y0 = -rows * cell / 2.0;
      const double fx = (x - x0) / cell;
      const double fy = (y - y0) / cell;
      if (fx < 0.0 || fy < 0.0 || fx >= cols || fy >= rows) return {color, 0};
      const int ix = static_cast<int>(fx);
      const int iy = static_cast<int>(fy);
      const bool is_dark = ((ix + iy) % 2) == 0;
      const double margin = 0.5 * (1.0 - core_fraction);
      const double lx = fx - ix, ly = fy - iy;
      const bool core = lx >= margin && lx <= 1.0 - margin && ly >= margin && ly <= 1.0 - margin;
      return {is_dark ? dark : light, core ? (is_dark ? 1 : 2) : 0};
    }
    case PatternKind::random_tiles: {
      const int ix = static_cast<int>(std::floor(x / cell));
      const int iy = static_cast<int>(std::floor(y / cell));
      if (std::abs(ix) >= 100 || std::abs(iy) >= 100) return {color, 0};
      const std::uint64_t key = (static_cast<std::uint64_t>(ix + 100) << 16) | static_cast<std::uint64_t>(iy + 100);
      Rgb c;
      for (int k = 0; k < 3; ++k) c[k] = 0.1 + 0.8 * unit_hash(tile_seed + 31 * k, key);
      return {c, (ix + 100) * 256 + (iy + 100) + 1};
    }
  }
  return {color, 0};
}

RenderedFrame render_frame(const SceneSpec& scene, std::size_t frame_index) {
  const CameraIntrinsics& cam = scene.camera;
  const Pose& pose = scene.poses.at(frame_index);
  RenderedFrame out;
  out.pose = pose;
  out.image = ImageRGB(cam.width, cam.height);
  out.depth = DepthMap(cam.width, cam.height, kInvalid);
  out.labels = Image<1>(cam.width, cam.height, 0.0f);
  const Eigen::Matrix3d rwc = pose.rotation.transpose();
  const Vec3 center = -rwc * pose.translation;
  Vec3 normal = pose.rotation * Vec3::UnitZ();
  const Medium& medium = scene.medium;

  parallel_for(cam.height, [&](int y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 d = pixel_ray(cam, x, y);
      const Vec3 dw = rwc * d;
      const double lambda = std::abs(dw.z()) > 1e-12 ? -center.z() / dw.z() : -1.0;
      if (!(lambda > 0.0)) {
        set_pixel(out.image, x, y, pure_water_radiance(d, medium, 2.5));
        continue;
      }
      const Vec3 pw = center + lambda * dw;
      const Point3 p = lambda * d;
      const auto [albedo, label] = scene.pattern.evaluate(pw.x(), pw.y());
      Vec3 n = normal;
      if (n.dot(p) > 0.0) n = -n;
      Rgb direct = Rgb::Zero();
      if (scene.shading == ShadingModel::camera_aligned || medium.mode == MediumMode::uniform_shallow) {
        direct = alpha_field(p, medium) * incidence_cosine(n, p) * albedo;
      } else {
        const double dist = p.norm();
        for (const LightSource& l : medium.lights) {
          const Vec3 to_light = l.position - p;
          const double r2 = to_light.squaredNorm();
          const double r = std::sqrt(r2);
          const double cos_l = std::max(0.0, n.dot(to_light) / r);
          direct += l.radiant_intensity_toward(p) * cos_l / r2 *
                    (-medium.water.attenuation * (r + dist)).exp() * albedo / kPi;
        }
      }
      set_pixel(out.image, x, y, direct + beta_field(p, medium));
      out.depth.at(x, y) = static_cast<float>(p.z());
      out.labels.at(x, y) = static_cast<float>(label);
    }
  });
  return out;
}

ImageRGB pure_water_image(const CameraIntrinsics& camera, const Medium& medium, double split_depth) {
  ImageRGB img(camera.width, camera.height);
  parallel_for(camera.height, [&](int y) {
    for (int x = 0; x < camera.width; ++x) {
      const Vec3 d = pixel_ray(camera, x, y);
      set_pixel(img, x, y, pure_water_radiance(d, medium, split_depth * d.norm()));
    }
  });
  return img;
}

LookupTable ground_truth_lut(const FrustumSpec& spec, const Medium& medium) {
  LookupTable lut(spec);
  for (int z = 0; z < spec.nz; ++z)
    for (int y = 0; y < spec.ny; ++y)
      for (int x = 0; x < spec.nx; ++x) {
        const Point3 p = spec.voxel_center(x, y, z);
        const Rgb a = alpha_field(p, medium);
        const Rgb b = beta_field(p, medium);
        const std::size_t idx = spec.flat_index(x, y, z);
        for (int c = 0; c < 3; ++c) {
          lut.alpha(c)[idx] = a[c];
          lut.beta(c)[idx] = b[c];
        }
        lut.obs_count()[idx] = 1.0;
      }
  return lut;
}

Medium reference_medium(const WaterParams& water) {
  Medium m;
  m.mode = (water.attenuation == 0.0).all() && (water.scattering == 0.0).all() ? MediumMode::in_air
                                                                                : MediumMode::deep_water;
  m.water = water;
  LightSource l;
  l.position = Vec3(0.0, -0.2, 0.0);
  m.lights.push_back(l);
  return m;
}

Pose look_at_plane(const Vec3& target, double distance, double yaw, double pitch, double roll) {
  const Eigen::Matrix3d q = (Eigen::AngleAxisd(roll, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitX()) *
                             Eigen::AngleAxisd(yaw, Vec3::UnitY()))
                                .toRotationMatrix();
  const Vec3 axis = q * Vec3::UnitZ();
  const Vec3 center = target - distance * axis;
  Pose pose;
  pose.rotation = q.transpose();
  pose.translation = -pose.rotation * center;
  return pose;
}

void degrade(ImageRGB& img, double sigma, bool quantize, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  for (float& v : img.data()) {
    double x = v;
    if (sigma > 0.0) x += noise(rng);
    x = std::clamp(x, 0.0, 1.0);
    if (quantize) x = std::round(x * 255.0) / 255.0;
    v = static_cast<float>(x);
  }
}

std::vector<Rgb> color_checker_palette() {
  static const int srgb[24][3] = {
      {115, 82, 68},   {194, 150, 130}, {98, 122, 157},  {87, 108, 67},   {133, 128, 177}, {103, 189, 170},
      {214, 126, 44},  {80, 91, 166},   {193, 90, 99},   {94, 60, 108},   {157, 188, 64},  {224, 163, 46},
      {56, 61, 150},   {70, 148, 73},   {175, 54, 60},   {231, 199, 31},  {187, 86, 149},  {8, 133, 161},
      {243, 243, 242}, {200, 200, 200}, {160, 160, 160}, {122, 122, 121}, {85, 85, 85},    {52, 52, 52}};
  std::vector<Rgb> out;
  for (const auto& c : srgb) out.emplace_back(c[0] / 255.0, c[1] / 255.0, c[2] / 255.0);
  return out;
}

nlohmann::json medium_to_json(const Medium& medium) {
  using nlohmann::json;
  auto arr = [](const Rgb& v) { return json::array({v[0], v[1], v[2]}); };
  auto vec = [](const Vec3& v) { return json::array({v[0], v[1], v[2]}); };
  json j;
  j["mode"] = medium.mode == MediumMode::deep_water ? "deep_water"
              : medium.mode == MediumMode::in_air   ? "in_air"
                                                    : "uniform_shallow";
  j["attenuation"] = arr(medium.water.attenuation);
  j["scattering"] = arr(medium.water.scattering);
  j["irradiance"] = arr(medium.irradiance);
  j["backscatter_infinity"] = arr(medium.backscatter_infinity);
  json lights = json::array();
  for (const LightSource& l : medium.lights)
    lights.push_back({{"position", vec(l.position)},
                      {"intensity", arr(l.intensity)},
                      {"direction", vec(l.direction)},
                      {"spot_exponent", l.spot_exponent}});
  j["lights"] = lights;
  return j;
}

Medium medium_from_json(const nlohmann::json& j) {
  auto rgb = [](const nlohmann::json& a) { return Rgb(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()); };
  auto vec = [](const nlohmann::json& a) { return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()); };
  Medium m;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "deep_water") m.mode = MediumMode::deep_water;
  else if (mode == "in_air") m.mode = MediumMode::in_air;
  else if (mode == "uniform_shallow") m.mode = MediumMode::uniform_shallow;
  else throw Error(Errc::invalid_input, "unknown medium mode '" + mode + "'");
  m.water.attenuation = rgb(j.at("attenuation"));
  m.water.scattering = rgb(j.at("scattering"));
  if (j.contains("irradiance")) m.irradiance = rgb(j["irradiance"]);
  if (j.contains("backscatter_infinity")) m.backscatter_infinity = rgb(j["backscatter_infinity"]);
  for (const auto& lj : j.at("lights")) {
    LightSource l;
    l.position = vec(lj.at("position"));
    l.intensity = rgb(lj.at("intensity"));
    if (lj.contains("direction")) l.direction = vec(lj["direction"]);
    l.spot_exponent = lj.value("spot_exponent", 0.0);
    m.lights.push_back(l);
  }
  m.water.validate();
  return m;
}

}  // namespace vlut::sim

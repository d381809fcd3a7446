#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlut/geometry.hpp"
#include "vlut/lut.hpp"
#include "vlut/manifest.hpp"

namespace vlut::sim {

struct WaterParams {
  Rgb attenuation = Rgb::Zero();  // eta, 1/m
  Rgb scattering = Rgb::Zero();   // b, 1/m; isotropic phase 1/(4 pi)

  void validate() const;
  static WaterParams clear();
  static WaterParams turbid();
  static WaterParams in_air() { return {}; }
};

// Point light in the camera frame. spot_exponent = 0 is isotropic; otherwise
// the radiant intensity falls off as max(0, cos)^spot_exponent around direction.
struct LightSource {
  Vec3 position = Vec3::Zero();
  Rgb intensity = Rgb::Ones();
  Vec3 direction = Vec3::UnitZ();
  double spot_exponent = 0.0;

  Rgb radiant_intensity_toward(const Point3& p) const;
};

enum class MediumMode { deep_water, uniform_shallow, in_air };

// Lambertian factor used by the renderer: camera_aligned evaluates cos against
// the view ray, the same approximation the restoration pipeline compensates;
// per_light uses the true incidence of each light.
enum class ShadingModel { camera_aligned, per_light };

struct Medium {
  MediumMode mode = MediumMode::deep_water;
  WaterParams water;
  std::vector<LightSource> lights;
  // uniform_shallow only
  Rgb irradiance = Rgb::Ones();
  Rgb backscatter_infinity = Rgb::Zero();
};

inline constexpr int kIntegrationSamples = 128;

// Continuous ground-truth fields at a camera-frame point.
Rgb alpha_field(const Point3& p, const Medium& medium);
Rgb beta_field(const Point3& p, const Medium& medium, int samples = kIntegrationSamples);

// Backscatter along a unit view direction out to the distance where all
// channels are attenuated below 1e-4. The first `split_distance` meters use
// the same quadrature as beta_field.
Rgb pure_water_radiance(const Vec3& direction, const Medium& medium, double split_distance,
                        int samples = kIntegrationSamples);

enum class PatternKind { uniform, color_checker, chessboard, random_tiles };

// Albedo painted on the world plane z = 0, local coordinates (x, y) in meters.
struct AlbedoPattern {
  PatternKind kind = PatternKind::uniform;
  Rgb color = Rgb::Constant(0.5);     // uniform color / background
  double cell = 0.1;                  // patch or square pitch, meters
  double gap = 0.0;                   // checker border inside each cell, meters
  int cols = 6;
  int rows = 4;
  std::vector<Rgb> palette;           // checker patches / random tile colors
  Rgb dark = Rgb::Constant(0.04);     // chessboard squares
  Rgb light = Rgb::Constant(0.85);
  double core_fraction = 0.5;         // chessboard: labeled central area per square
  std::uint64_t tile_seed = 0;

  // Albedo and region label (0 = unlabeled) at a plane point.
  std::pair<Rgb, int> evaluate(double x, double y) const;
};

struct SceneSpec {
  CameraIntrinsics camera;
  Medium medium;
  ShadingModel shading = ShadingModel::camera_aligned;
  AlbedoPattern pattern;
  std::vector<Pose> poses;  // camera-from-world per frame
};

struct RenderedFrame {
  ImageRGB image;     // noiseless linear radiance
  DepthMap depth;     // NaN where the ray misses the plane
  Image<1> labels;    // pattern labels, 0 outside labeled regions
  Pose pose;
};

RenderedFrame render_frame(const SceneSpec& scene, std::size_t frame_index);

// Image with no geometry in view; rays use split_distance = z_far semantics.
ImageRGB pure_water_image(const CameraIntrinsics& camera, const Medium& medium, double split_depth);

LookupTable ground_truth_lut(const FrustumSpec& spec, const Medium& medium);

// Single isotropic light slightly above the camera, unit power.
Medium reference_medium(const WaterParams& water);

// Camera at `distance` along its optical axis from the world point `target` on
// the z = 0 plane, rotated by yaw (about y), pitch (about x) and roll (about z).
Pose look_at_plane(const Vec3& target, double distance, double yaw, double pitch, double roll);

struct RecipeOptions {
  std::string recipe;
  std::uint64_t seed = 0;
  std::optional<int> width;
  std::optional<int> height;
  std::optional<double> noise_sigma;
  std::optional<bool> quantize;
};

const std::vector<std::string>& recipe_names();

// Writes images, depth maps, masks and manifest.json under out_dir.
FrameManifest make_dataset(const RecipeOptions& options, const std::filesystem::path& out_dir);

nlohmann::json medium_to_json(const Medium& medium);
Medium medium_from_json(const nlohmann::json& j);

// Adds N(0, sigma) noise, clips to [0,1] and optionally rounds to 8-bit levels.
void degrade(ImageRGB& img, double sigma, bool quantize, std::uint64_t seed);

// Classic 24-patch color checker in 8-bit sRGB code values scaled to [0,1].
std::vector<Rgb> color_checker_palette();

}  // namespace vlut::sim

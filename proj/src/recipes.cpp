// Named simulator datasets mirroring the calibration experiment layouts.

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "vlut/error.hpp"
#include "vlut/image_io.hpp"
#include "vlut/simulate.hpp"

namespace vlut::sim {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const Rgb kBoardA = Rgb(181, 110, 30) / 255.0;
const Rgb kBoardB = Rgb(80, 160, 90) / 255.0;

enum class AnnotationStyle { none, whole_frame, labels };

CameraIntrinsics make_camera(int width, int height) {
  CameraIntrinsics cam;
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = width / 2.0;  // 90 degree horizontal field of view
  cam.cx = (width - 1) / 2.0;
  cam.cy = (height - 1) / 2.0;
  return cam;
}

AlbedoPattern uniform(const Rgb& c) {
  AlbedoPattern p;
  p.kind = PatternKind::uniform;
  p.color = c;
  return p;
}

AlbedoPattern checker() {
  AlbedoPattern p;
  p.kind = PatternKind::color_checker;
  p.color = Rgb::Constant(0.2);
  p.cell = 0.2;
  p.gap = 0.02;
  p.cols = 6;
  p.rows = 4;
  p.palette = color_checker_palette();
  return p;
}

class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path out_dir, const CameraIntrinsics& cam, double sigma, bool quantize,
                std::uint64_t seed)
      : out_(std::move(out_dir)), sigma_(sigma), quantize_(quantize), seed_(seed) {
    manifest_.base_dir = out_;
    manifest_.camera = cam;
    std::filesystem::create_directories(out_ / "images");
    std::filesystem::create_directories(out_ / "depth");
    std::filesystem::create_directories(out_ / "masks");
  }

  FrameManifest& manifest() { return manifest_; }

  void add(const std::string& name, const SceneSpec& scene, FrameRole role, const std::string& group,
           double distance, AnnotationStyle style) {
    const RenderedFrame r = render_frame(scene, 0);
    FrameEntry f;
    f.name = name;
    f.pose = r.pose;
    f.role = role;
    f.group = group;
    f.distance = distance;
    f.image = write_image(name, r.image);
    f.depth = std::filesystem::path("depth") / (name + ".pfm");
    io::write_pfm(out_ / *f.depth, r.depth);
    if (style == AnnotationStyle::whole_frame) {
      Annotation a;
      a.name = "board";
      a.albedo = scene.pattern.evaluate(0.0, 0.0).first;
      f.annotations.push_back(a);
    } else if (style == AnnotationStyle::labels) {
      const std::filesystem::path mask = std::filesystem::path("masks") / (name + "_labels.png");
      io::write_png_labels(out_ / mask, r.labels);
      std::set<int> present;
      for (float v : r.labels.data())
        if (v > 0.0f) present.insert(static_cast<int>(v));
      for (int label : present) {
        Annotation a;
        a.name = "region_" + std::to_string(label);
        a.mask = mask;
        a.label = label;
        a.albedo = label_albedo(scene.pattern, label);
        f.annotations.push_back(a);
      }
    }
    manifest_.frames.push_back(std::move(f));
  }

  void add_pure_water(const std::string& name, const Medium& medium, double split_depth) {
    FrameEntry f;
    f.name = name;
    f.role = FrameRole::pure_water;
    f.image = write_image(name, pure_water_image(manifest_.camera, medium, split_depth));
    manifest_.frames.push_back(std::move(f));
  }

 private:
  static Rgb label_albedo(const AlbedoPattern& p, int label) {
    switch (p.kind) {
      case PatternKind::uniform: return p.color;
      case PatternKind::color_checker: return p.palette.at(static_cast<std::size_t>(label - 1));
      case PatternKind::chessboard: return label == 1 ? p.dark : p.light;
      case PatternKind::random_tiles: {
        const int v = label - 1;
        const int ix = v / 256 - 100;
        const int iy = v % 256 - 100;
        return p.evaluate((ix + 0.5) * p.cell, (iy + 0.5) * p.cell).first;
      }
    }
    return p.color;
  }

  std::filesystem::path write_image(const std::string& name, ImageRGB img) {
    degrade(img, sigma_, quantize_, seed_ * 1000003ULL + counter_++);
    if (quantize_) {
      const auto rel = std::filesystem::path("images") / (name + ".png");
      io::write_png(out_ / rel, img, 8);
      return rel;
    }
    const auto rel = std::filesystem::path("images") / (name + ".pfm");
    io::write_pfm(out_ / rel, img);
    return rel;
  }

  std::filesystem::path out_;
  double sigma_;
  bool quantize_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  FrameManifest manifest_;
};

struct RecipeContext {
  const RecipeOptions& options;
  std::mt19937_64 rng;
  CameraIntrinsics camera;
  double sigma;
  bool quantize;

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  std::string frame_name(const char* prefix, int i) const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%03d", prefix, i);
    return buf;
  }
};

using RecipeFn = std::function<void(RecipeContext&, DatasetWriter&)>;

Medium two_light_medium(const WaterParams& water, double offset, double power) {
  Medium m;
  m.mode = MediumMode::deep_water;
  m.water = water;
  for (double side : {-1.0, 1.0}) {
    LightSource l;
    l.position = Vec3(side * offset, 0.0, 0.0);
    l.intensity = Rgb::Constant(power);
    m.lights.push_back(l);
  }
  return m;
}

SceneSpec scene_for(const RecipeContext& ctx, const Medium& medium, const AlbedoPattern& pattern, const Pose& pose) {
  SceneSpec s;
  s.camera = ctx.camera;
  s.medium = medium;
  s.pattern = pattern;
  s.poses = {pose};
  return s;
}

void two_boards(RecipeContext& ctx, DatasetWriter& w, const Medium& medium, double z_near, double z_far,
                int calibration_frames, bool per_board, const std::vector<double>& test_distances) {
  w.manifest().z_near = z_near;
  w.manifest().z_far = z_far;
  w.manifest().simulation["medium"] = medium_to_json(medium);
  int index = 0;
  auto add_board = [&](const Rgb& color, double d) {
    const Pose pose = look_at_plane(Vec3::Zero(), d, ctx.uniform(-20, 20) * kDeg, ctx.uniform(-20, 20) * kDeg,
                                    ctx.uniform(-10, 10) * kDeg);
    w.add(ctx.frame_name("calib", index++), scene_for(ctx, medium, uniform(color), pose), FrameRole::calibration,
          "board", d, AnnotationStyle::whole_frame);
  };
  if (per_board) {
    for (const Rgb& color : {kBoardA, kBoardB})
      for (int i = 0; i < calibration_frames; ++i)
        add_board(color, z_near + (z_far - z_near) * i / (calibration_frames - 1));
  } else {
    for (int i = 0; i < calibration_frames; ++i)
      add_board(i % 2 == 0 ? kBoardA : kBoardB, z_near + (z_far - z_near) * i / (calibration_frames - 1));
  }
  for (std::size_t i = 0; i < test_distances.size(); ++i) {
    const Pose pose = look_at_plane(Vec3::Zero(), test_distances[i], ctx.uniform(-10, 10) * kDeg,
                                    ctx.uniform(-10, 10) * kDeg, 0.0);
    w.add(ctx.frame_name("checker", static_cast<int>(i)), scene_for(ctx, medium, checker(), pose), FrameRole::test,
          "checker", test_distances[i], AnnotationStyle::labels);
  }
  int t = 0;
  for (double d = z_near; d <= z_far + 1e-9; d += 0.25, ++t) {
    const Pose pose = look_at_plane(Vec3::Zero(), d, 0.0, 0.0, 0.0);
    w.add(ctx.frame_name("trend", t), scene_for(ctx, medium, uniform(kBoardA), pose), FrameRole::test, "trend", d,
          AnnotationStyle::whole_frame);
  }
  for (int i = 0; i < 2; ++i) w.add_pure_water(ctx.frame_name("water", i), medium, z_far);
}

void recipe_clear(RecipeContext& ctx, DatasetWriter& w) {
  two_boards(ctx, w, two_light_medium(WaterParams::clear(), 0.4, 0.9), 0.5, 2.5, 31, false, {1.0, 1.5, 2.0});
}

void recipe_turbid(RecipeContext& ctx, DatasetWriter& w) {
  two_boards(ctx, w, two_light_medium(WaterParams::turbid(), 0.4, 1.2), 0.5, 1.5, 10, true, {0.75, 1.0, 1.25});
}

Medium in_air_medium(const Vec3& light, double power) {
  Medium m;
  m.mode = MediumMode::in_air;
  LightSource l;
  l.position = light;
  l.intensity = Rgb::Constant(power);
  m.lights.push_back(l);
  return m;
}

void recipe_inair_whiteboard(RecipeContext& ctx, DatasetWriter& w) {
  const Medium medium = in_air_medium(Vec3::Zero(), 0.7);
  w.manifest().z_near = 0.5;
  w.manifest().z_far = 2.5;
  w.manifest().simulation["medium"] = medium_to_json(medium);
  for (int i = 0; i < 30; ++i) {
    const double d = 0.5 + 2.0 * i / 29.0;
    const Pose pose = look_at_plane(Vec3::Zero(), d, ctx.uniform(-20, 20) * kDeg, ctx.uniform(-20, 20) * kDeg,
                                    ctx.uniform(-10, 10) * kDeg);
    w.add(ctx.frame_name("calib", i), scene_for(ctx, medium, uniform(Rgb::Ones()), pose), FrameRole::calibration,
          "board", d, AnnotationStyle::whole_frame);
  }
  int t = 0;
  for (double d : {1.0, 1.5}) {
    const Pose pose = look_at_plane(Vec3::Zero(), d, ctx.uniform(-10, 10) * kDeg, ctx.uniform(-10, 10) * kDeg, 0.0);
    w.add(ctx.frame_name("checker", t++), scene_for(ctx, medium, checker(), pose), FrameRole::test, "checker", d,
          AnnotationStyle::labels);
  }
  const Pose tilted = look_at_plane(Vec3::Zero(), 1.2, 30 * kDeg, 10 * kDeg, 0.0);
  w.add("red_000", scene_for(ctx, medium, uniform(Rgb(0.8, 0.15, 0.1)), tilted), FrameRole::test, "red", 1.2,
        AnnotationStyle::whole_frame);
}

void recipe_inair_colorpatch_slab(RecipeContext& ctx, DatasetWriter& w) {
  const Medium medium = in_air_medium(Vec3(0.0, 0.0, 0.1), 2.6);
  w.manifest().z_near = 0.95;
  w.manifest().z_far = 1.05;
  w.manifest().simulation["medium"] = medium_to_json(medium);
  AlbedoPattern tiles;
  tiles.kind = PatternKind::random_tiles;
  tiles.cell = 0.12;
  tiles.tile_seed = ctx.options.seed;
  for (int i = 0; i < 18; ++i) {
    const Vec3 target(ctx.uniform(-0.3, 0.3), ctx.uniform(-0.3, 0.3), 0.0);
    const Pose pose = look_at_plane(target, 1.0, 0.0, 0.0, ctx.uniform(-30, 30) * kDeg);
    w.add(ctx.frame_name("view", i), scene_for(ctx, medium, tiles, pose), FrameRole::calibration, "tiles", 1.0,
          AnnotationStyle::labels);
  }
}

void recipe_chessboard_tank(RecipeContext& ctx, DatasetWriter& w) {
  Medium medium = two_light_medium(WaterParams::turbid(), 0.15, 0.8);
  // The right-hand light points 10 degrees inward.
  medium.lights[1].direction = Vec3(-std::sin(10 * kDeg), 0.0, std::cos(10 * kDeg));
  medium.lights[1].spot_exponent = 2.0;
  w.manifest().z_near = 0.5;
  w.manifest().z_far = 1.5;
  w.manifest().simulation["medium"] = medium_to_json(medium);
  AlbedoPattern board;
  board.kind = PatternKind::chessboard;
  board.cols = 9;
  board.rows = 7;
  board.cell = 0.08;
  board.color = Rgb::Constant(0.4);
  for (int i = 0; i < 41; ++i) {
    const double d = ctx.uniform(0.5, 1.5);
    const Vec3 target(ctx.uniform(-0.1, 0.1), ctx.uniform(-0.1, 0.1), 0.0);
    const Pose pose = look_at_plane(target, d, ctx.uniform(-25, 25) * kDeg, ctx.uniform(-25, 25) * kDeg,
                                    ctx.uniform(-15, 15) * kDeg);
    w.add(ctx.frame_name("calib", i), scene_for(ctx, medium, board, pose), FrameRole::calibration, "chessboard", d,
          AnnotationStyle::labels);
  }
  int t = 0;
  for (double d : {0.8, 1.1}) {
    const Pose pose = look_at_plane(Vec3::Zero(), d, ctx.uniform(-10, 10) * kDeg, ctx.uniform(-10, 10) * kDeg, 0.0);
    w.add(ctx.frame_name("checker", t++), scene_for(ctx, medium, checker(), pose), FrameRole::test, "checker", d,
          AnnotationStyle::labels);
  }
  for (int i = 0; i < 2; ++i) w.add_pure_water(ctx.frame_name("water", i), medium, 1.5);
}

const std::map<std::string, RecipeFn>& recipes() {
  static const std::map<std::string, RecipeFn> table = {
      {"clear_two_boards", recipe_clear},
      {"turbid_two_boards", recipe_turbid},
      {"inair_whiteboard", recipe_inair_whiteboard},
      {"inair_colorpatch_slab", recipe_inair_colorpatch_slab},
      {"chessboard_tank", recipe_chessboard_tank},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : recipes()) v.push_back(name);
    return v;
  }();
  return names;
}

FrameManifest make_dataset(const RecipeOptions& options, const std::filesystem::path& out_dir) {
  const auto it = recipes().find(options.recipe);
  if (it == recipes().end()) throw Error(Errc::invalid_argument, "unknown recipe '" + options.recipe + "'");
  const int width = options.width.value_or(320);
  const int height = options.height.value_or(240);
  if (width < 8 || height < 8) throw Error(Errc::invalid_argument, "image size must be at least 8x8");
  RecipeContext ctx{options, std::mt19937_64(options.seed), make_camera(width, height),
                    options.noise_sigma.value_or(0.005), options.quantize.value_or(true)};
  DatasetWriter writer(out_dir, ctx.camera, ctx.sigma, ctx.quantize, options.seed);
  writer.manifest().simulation["recipe"] = options.recipe;
  writer.manifest().simulation["seed"] = options.seed;
  writer.manifest().simulation["noise_sigma"] = ctx.sigma;
  writer.manifest().simulation["quantize"] = ctx.quantize;
  writer.manifest().simulation["shading"] = "camera_aligned";
  it->second(ctx, writer);
  save_manifest(out_dir / "manifest.json", writer.manifest());
  return writer.manifest();
}

}  // namespace vlut::sim

#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "vlut/dataset.hpp"
#include "vlut/error.hpp"
#include "vlut/image_io.hpp"
#include "vlut/simulate.hpp"

using namespace vlut;

namespace {

FrameManifest one_frame(const std::filesystem::path& dir, const ImageRGB& img, const DepthMap* depth,
                        Gamma gamma = Gamma::linear, const std::string& ext = ".png") {
  FrameManifest m;
  m.base_dir = dir;
  m.camera = test::small_camera(img.width(), img.height());
  FrameEntry e;
  e.name = "f0";
  e.image = "f0" + ext;
  e.gamma = gamma;
  if (ext == ".png")
    io::write_png(dir / e.image, img);
  else
    io::write_pfm(dir / e.image, img);
  if (depth) {
    e.depth = "f0_depth.pfm";
    io::write_pfm(dir / *e.depth, *depth);
  }
  m.frames.push_back(e);
  return m;
}

LoadedFrame make_frame(const ImageRGB& img, const DepthMap& depth, const CameraIntrinsics& c, int index = 0) {
  LoadedFrame f;
  f.index = index;
  f.image = img;
  f.depth = depth;
  f.normals = normals_from_depth(depth, c);
  fill_border_normals(f.normals, depth);
  return f;
}

// Large square tiles of distinct flat colors.
ImageRGB tiles(int w, int h, int cell) {
  ImageRGB img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int t = (x / cell) * 7 + (y / cell) * 3;
      set_pixel(img, x, y, Rgb(0.2 + 0.1 * (t % 6), 0.3 + 0.08 * (t % 5), 0.25 + 0.12 * (t % 4)));
    }
  return img;
}

}  // namespace

TEST_CASE("sRGB decoding and integer scaling") {
  CHECK(io::srgb_to_linear(0.5) == doctest::Approx(0.2140).epsilon(1e-3));
  CHECK(io::srgb_to_linear(0.0) == 0.0);
  CHECK(io::srgb_to_linear(1.0) == doctest::Approx(1.0));

  const auto dir = test::scratch_dir("dataset_load");
  ImageRGB img(8, 6, 1.0f);
  FrameManifest m = one_frame(dir, img, nullptr);
  LoadedFrame f = load_frame(m, 0);
  CHECK(f.image.at(3, 2, 1) == 1.0f);
  CHECK_FALSE(f.has_depth());

  ImageRGB half(8, 6, 0.5f);
  m = one_frame(dir, half, nullptr, Gamma::srgb, ".pfm");
  f = load_frame(m, 0);
  CHECK(f.image.at(1, 1, 0) == doctest::Approx(0.2140).epsilon(1e-3));
}

TEST_CASE("negative depth is invalid") {
  const auto dir = test::scratch_dir("dataset_depth");
  ImageRGB img(8, 6, 0.5f);
  DepthMap d(8, 6, 1.0f);
  d.at(4, 3) = -2.0f;
  FrameManifest m = one_frame(dir, img, &d);
  LoadedFrame f = load_frame(m, 0);
  REQUIRE(f.has_depth());
  CHECK_FALSE(depth_valid(f.depth.at(4, 3)));
  CHECK(depth_valid(f.depth.at(3, 3)));
}

TEST_CASE("load errors name the frame") {
  const auto dir = test::scratch_dir("dataset_err");
  ImageRGB img(8, 6, 0.5f);
  FrameManifest m = one_frame(dir, img, nullptr);
  m.camera.width = 10;
  try {
    load_frame(m, 0);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::load_error);
    CHECK(std::string(e.what()).find("f0") != std::string::npos);
  }
  m.camera.width = 8;
  m.frames[0].image = "missing.png";
  CHECK_THROWS_AS(load_frame(m, 0), Error);
}

TEST_CASE("white board samples recover the albedo") {
  const CameraIntrinsics c = test::small_camera();
  FrustumSpec spec = test::small_spec();
  const DepthMap depth = test::flat_depth(c, 1.0);

  // Uniform image: raw colors equal image colors.
  LoadedFrame flat = make_frame(ImageRGB(c.width, c.height, 0.6f), depth, c);
  const Image<1> all(c.width, c.height, 1.0f);
  auto obs = extract_known_color_samples(flat, all, Rgb::Ones(), spec);
  REQUIRE_FALSE(obs.empty());
  CHECK(obs.size() <= 1200);
  for (const auto& o : obs) {
    CHECK((o.raw - 0.6).abs().maxCoeff() < 1e-6);
    REQUIRE(o.known_albedo);
    CHECK((*o.known_albedo - 1.0).abs().maxCoeff() == 0.0);
    CHECK(o.p.z() == doctest::Approx(1.0));
  }

  // I = cos(theta) * 1 with alpha = 1, beta = 0: compensated colors are 1.
  const NormalMap n = flat.normals;
  ImageRGB shaded(c.width, c.height);
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      const Point3 p = backproject({double(x), double(y)}, 1.0, c);
      set_pixel(shaded, x, y, Rgb::Constant(incidence_cosine(n.at(x, y), p)));
    }
  LoadedFrame board = make_frame(shaded, depth, c);
  obs = extract_known_color_samples(board, all, Rgb::Ones(), spec);
  REQUIRE_FALSE(obs.empty());
  for (const auto& o : obs) {
    CHECK((o.color - 1.0).abs().maxCoeff() < 2e-3);
    CHECK(o.beta_scale >= 1.0);
  }
}

TEST_CASE("full-frame grid on a large image stays within 40x30") {
  const CameraIntrinsics c = test::small_camera(320, 240);
  FrustumSpec spec = test::small_spec();
  spec.intr = c;
  LoadedFrame f = make_frame(ImageRGB(c.width, c.height, 0.4f), test::flat_depth(c, 1.2), c);
  const auto obs = extract_known_color_samples(f, Image<1>(c.width, c.height, 1.0f), Rgb::Ones(), spec);
  CHECK(obs.size() <= 1200);
  CHECK(obs.size() > 1000);
}

TEST_CASE("grazing region yields no samples") {
  const CameraIntrinsics c = test::small_camera();
  FrustumSpec spec = test::small_spec();
  // Plane z = 1 + 10 X, seen almost edge-on near the image center.
  const double k = 10.0;
  DepthMap d(c.width, c.height);
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      const double den = 1.0 - k * (x - c.cx) / c.fx;
      d.at(x, y) = den > 0.2 ? static_cast<float>(1.0 / den) : kInvalid;
    }
  LoadedFrame f = make_frame(ImageRGB(c.width, c.height, 0.5f), d, c);
  Image<1> mask(c.width, c.height);
  for (int y = 8; y < 40; ++y)
    for (int x = 30; x <= 33; ++x) mask.at(x, y) = 1.0f;
  CHECK(extract_known_color_samples(f, mask, Rgb::Ones(), spec).empty());
}

TEST_CASE("SLIC on a uniform image makes rectangular tiles") {
  const SuperpixelMap m = slic_superpixels(ImageRGB(64, 64, 0.5f), 4);
  REQUIRE(m.stats.size() == 4);
  for (const auto& s : m.stats) CHECK(s.count == 1024);
  CHECK(m.label(5, 5) != m.label(60, 5));
  CHECK(m.label(5, 5) != m.label(5, 60));
  CHECK(m.label(5, 5) == m.label(30, 30));
}

TEST_CASE("SLIC splits at a color edge") {
  ImageRGB img(60, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 60; ++x) set_pixel(img, x, y, x < 27 ? Rgb(0.8, 0.1, 0.1) : Rgb(0.1, 0.2, 0.8));
  const SuperpixelMap m = slic_superpixels(img, 2);
  REQUIRE(m.stats.size() == 2);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 60; ++x) CHECK(m.label(x, y) == m.label(x < 27 ? 0 : 59, y));
  CHECK(m.label(0, 0) != m.label(59, 0));
}

TEST_CASE("SLIC at k=300 on 640x480") {
  const SuperpixelMap m = slic_superpixels(tiles(640, 480, 53), 300);
  const double k = static_cast<double>(m.stats.size());
  CHECK(k >= 240);
  CHECK(k <= 360);
  std::size_t total = 0;
  for (const auto& s : m.stats) total += s.count;
  CHECK(total == 640u * 480u);
  CHECK(total / k == doctest::Approx(1024).epsilon(0.2));
  std::set<int> seen;
  for (float v : m.labels.data()) seen.insert(static_cast<int>(v));
  CHECK(seen.size() == m.stats.size());
  CHECK(*seen.rbegin() == static_cast<int>(m.stats.size()) - 1);
}

TEST_CASE("identical frames give matching correspondences") {
  const CameraIntrinsics c = test::small_camera(128, 96);
  FrustumSpec spec = test::small_spec();
  spec.intr = c;
  const ImageRGB img = tiles(c.width, c.height, 16);
  const DepthMap d = test::flat_depth(c, 1.0);
  LoadedFrame a = make_frame(img, d, c, 0), b = make_frame(img, d, c, 1);
  const SuperpixelMap sp = slic_superpixels(img, 48);
  const auto pairs = extract_correspondences(a, b, sp, spec);
  REQUIRE_FALSE(pairs.empty());
  for (const auto& pr : pairs) {
    CHECK((pr.a.color - pr.b.color).abs().maxCoeff() < 1e-12);
    CHECK((pr.a.p - pr.b.p).norm() < 1e-9);
    CHECK(pr.a.frame == 0);
    CHECK(pr.b.frame == 1);
  }

  // Something 30% closer in b hides every centroid.
  LoadedFrame occluded = make_frame(img, test::flat_depth(c, 0.7), c, 1);
  CHECK(extract_correspondences(a, occluded, sp, spec).empty());
}

TEST_CASE("simulator pairs agree in world coordinates") {
  sim::SceneSpec scene;
  scene.camera = test::small_camera(320, 240);
  scene.medium = sim::reference_medium(sim::WaterParams::clear());
  scene.pattern.kind = sim::PatternKind::random_tiles;
  scene.pattern.cell = 0.15;
  scene.pattern.tile_seed = 7;
  scene.poses = {sim::look_at_plane({0, 0, 0}, 1.0, 0.0, 0.0, 0.0),
                 sim::look_at_plane({0.08, -0.05, 0}, 1.1, 0.1, -0.05, 0.2)};
  FrustumSpec spec = test::small_spec(4, 3, 5, 0.5, 2.0);
  spec.intr = scene.camera;
  LoadedFrame f[2];
  for (int i = 0; i < 2; ++i) {
    const sim::RenderedFrame r = sim::render_frame(scene, i);
    f[i] = make_frame(r.image, r.depth, scene.camera, i);
    f[i].pose = r.pose;
  }
  const auto pairs = extract_correspondences(f[0], f[1], slic_superpixels(f[0].image, 120), spec);
  REQUIRE(pairs.size() >= 5);
  for (const auto& pr : pairs) {
    const Point3 wa = f[0].pose.to_world(pr.a.p), wb = f[1].pose.to_world(pr.b.p);
    CHECK((wa - wb).norm() < 0.01 * pr.a.p.z());
  }
}

TEST_CASE("per-voxel cap keeps the closest to the center") {
  FrustumSpec spec = test::small_spec();
  const Point3 c = spec.voxel_center(1, 1, 2);
  std::vector<Observation> obs;
  for (int i = 0; i < 5; ++i) {
    Observation o;
    o.p = c + Vec3(0.002 * (5 - i), 0, 0);
    o.frame = i;
    obs.push_back(o);
  }
  const auto kept = cap_per_voxel(obs, spec, 2);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].frame == 3);
  CHECK(kept[1].frame == 4);
  CHECK(cap_per_voxel(obs, spec, 10).size() == 5);
}

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>

#include "helpers.hpp"
#include "vlut/error.hpp"
#include "vlut/image_io.hpp"
#include "vlut/restore.hpp"
#include "vlut/simulate.hpp"

using namespace vlut;

namespace {

ImageRGB random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 0.95f);
  ImageRGB img(w, h);
  for (float& v : img.data()) v = u(rng);
  return img;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("identity table returns the input") {
  const FrustumSpec s = test::small_spec();
  std::mt19937_64 rng(89);
  const ImageRGB img = random_image(s.intr.width, s.intr.height, rng);
  const LookupTable lut(s, 1.0, 0.0);
  RestoreOptions opts;
  opts.shading = false;
  const RestoredFrame r = restore_image(img, test::flat_depth(s.intr, 1.2), lut, opts);
  CHECK(r.invalid_pixels == 0);
  for (std::size_t i = 0; i < img.data().size(); ++i) CHECK(r.albedo.data()[i] == img.data()[i]);

  // With shading on, only the view ray decides; on-axis cos is nearly 1.
  const FrustumSpec odd = [] {
    FrustumSpec f = test::small_spec();
    f.intr = test::small_camera(65, 49);
    return f;
  }();
  const ImageRGB img2 = random_image(65, 49, rng);
  const RestoredFrame r2 = restore_image(img2, test::flat_depth(odd.intr, 1.2), LookupTable(odd, 1.0, 0.0));
  CHECK(r2.albedo.at(32, 24, 1) == doctest::Approx(img2.at(32, 24, 1)).epsilon(1e-6));
}

TEST_CASE("inverts the forward model") {
  const FrustumSpec s = test::small_spec();
  const LookupTable lut(s, 0.5, 0.3);
  ImageRGB img(s.intr.width, s.intr.height, 0.8f);
  RestoreOptions opts;
  opts.shading = false;
  const RestoredFrame r = restore_image(img, test::flat_depth(s.intr, 1.0), lut, opts);
  CHECK(r.albedo.at(10, 10, 0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("invalid pixels") {
  const FrustumSpec s = test::small_spec();
  ImageRGB img(s.intr.width, s.intr.height, 0.5f);
  DepthMap d = test::flat_depth(s.intr, 1.0);
  d.at(5, 5) = kInvalid;
  LookupTable dark(s, 1e-4, 0.0);
  const RestoredFrame r = restore_image(img, d, dark);
  CHECK(r.invalid_pixels == img.pixel_count());

  const RestoredFrame ok = restore_image(img, d, LookupTable(s, 1.0, 0.0));
  CHECK(ok.valid.at(5, 5) == 0.0f);
  CHECK(std::isnan(ok.albedo.at(5, 5, 0)));
  CHECK(ok.confidence.at(5, 5, 0) == 0.0f);
  CHECK(ok.valid.at(20, 20) == 1.0f);

  const RestoredFrame none = restore_image(img, DepthMap(), LookupTable(s, 1.0, 0.0));
  CHECK(none.invalid_pixels == img.pixel_count());

  CHECK_THROWS_AS(restore_image(ImageRGB(10, 10), DepthMap(), LookupTable(s, 1.0, 0.0)), Error);
}

TEST_CASE("restoration is monotone in intensity") {
  const FrustumSpec s = test::small_spec();
  std::mt19937_64 rng(97);
  const LookupTable lut = test::random_lut(s, rng);
  ImageRGB lo(s.intr.width, s.intr.height), hi(s.intr.width, s.intr.height);
  std::uniform_real_distribution<float> u(0.0f, 0.9f);
  for (std::size_t i = 0; i < lo.data().size(); ++i) {
    lo.data()[i] = u(rng);
    hi.data()[i] = lo.data()[i] + 0.05f;
  }
  const DepthMap d = test::flat_depth(s.intr, 1.7);
  const RestoredFrame a = restore_image(lo, d, lut), b = restore_image(hi, d, lut);
  for (std::size_t i = 0; i < lo.data().size(); ++i)
    if (std::isfinite(a.albedo.data()[i])) CHECK(b.albedo.data()[i] > a.albedo.data()[i]);
}

TEST_CASE("confidence") {
  const FrustumSpec s = test::small_spec();
  LookupTable lut(s, 1.0, 0.05);
  for (double& o : lut.obs_count()) o = 20;
  const DepthMap d = test::flat_depth(s.intr, 0.6);

  ImageRGB img(s.intr.width, s.intr.height, 0.9f);
  for (int y = 0; y < s.intr.height; ++y)
    for (int x = 0; x < s.intr.width; ++x) img.at(x, y, 1) = 0.99f;
  ImageRGB c = confidence_map(img, d, lut);
  CHECK(c.at(30, 20, 1) == 0.0f);
  CHECK(c.at(30, 20, 0) > 0.0f);
  CHECK(c.at(30, 20, 0) == doctest::Approx(1.0));

  LookupTable unseen(s, 1.0, 0.05);
  c = confidence_map(img, d, unseen);
  for (float v : c.data()) CHECK(v == 0.0f);

  // Dim pixels get lower confidence than bright ones.
  ImageRGB dim(s.intr.width, s.intr.height, 0.05f);
  const ImageRGB cd = confidence_map(dim, d, lut);
  CHECK(cd.at(30, 20, 0) < 0.5f);
  for (float v : cd.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("rendered checker restored with its ground-truth table") {
  sim::SceneSpec scene;
  scene.camera = test::small_camera(160, 120);
  scene.medium = sim::reference_medium(sim::WaterParams::clear());
  scene.pattern.kind = sim::PatternKind::color_checker;
  scene.pattern.palette = sim::color_checker_palette();
  scene.pattern.cell = 0.07;
  scene.pattern.gap = 0.01;
  scene.poses = {sim::look_at_plane({0, 0, 0}, 1.5, 0.0, 0.0, 0.0)};
  const sim::RenderedFrame f = sim::render_frame(scene, 0);

  // Fine grid so trilinear error in the convex alpha field stays small.
  FrustumSpec spec = test::small_spec(80, 60, 40, 0.5, 2.5);
  spec.intr = scene.camera;
  const LookupTable gt = sim::ground_truth_lut(spec, scene.medium);
  const RestoredFrame r = restore_image(f.image, f.depth, gt);

  std::map<int, std::pair<Rgb, int>> acc;
  for (int y = 0; y < f.labels.height(); ++y)
    for (int x = 0; x < f.labels.width(); ++x) {
      const int l = static_cast<int>(f.labels.at(x, y));
      if (l == 0 || r.valid.at(x, y) == 0.0f) continue;
      auto& [sum, n] = acc.try_emplace(l, Rgb::Zero(), 0).first->second;
      sum += pixel(r.albedo, x, y);
      ++n;
    }
  REQUIRE(acc.size() == 24);
  double worst = 0.0;
  for (const auto& [l, v] : acc) {
    const Rgb truth = scene.pattern.palette[l - 1];
    worst = std::max(worst, (v.first / v.second - truth).abs().maxCoeff());
  }
  CHECK(worst < 0.02);
}

TEST_CASE("batch restore") {
  const auto dir = test::scratch_dir("restore_batch");
  const FrustumSpec s = test::small_spec();
  const LookupTable lut(s, 0.8, 0.05);

  FrameManifest empty;
  empty.base_dir = dir;
  empty.camera = s.intr;
  const auto sum0 = restore_batch(empty, lut, dir / "out0");
  CHECK(sum0["restored"] == 0);

  std::mt19937_64 rng(101);
  io::write_png(dir / "a.png", random_image(s.intr.width, s.intr.height, rng));
  io::write_pfm(dir / "a_depth.pfm", test::flat_depth(s.intr, 1.1));
  FrameManifest m = empty;
  for (const char* name : {"first", "second"}) {
    FrameEntry e;
    e.name = name;
    e.image = "a.png";
    e.depth = "a_depth.pfm";
    e.role = FrameRole::test;
    m.frames.push_back(e);
  }
  FrameEntry nodepth;
  nodepth.name = "flat";
  nodepth.image = "a.png";
  m.frames.push_back(nodepth);
  const auto sum = restore_batch(m, lut, dir / "out");
  CHECK(sum["restored"] == 2);
  CHECK(sum["skipped"].size() == 1);
  CHECK(slurp(dir / "out" / "first_restored.pfm") == slurp(dir / "out" / "second_restored.pfm"));
  CHECK(slurp(dir / "out" / "first_confidence.png") == slurp(dir / "out" / "second_confidence.png"));
  CHECK(std::filesystem::exists(dir / "out" / "summary.json"));
}

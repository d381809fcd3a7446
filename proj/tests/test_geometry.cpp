#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vlut/error.hpp"
#include "vlut/geometry.hpp"

using namespace vlut;

TEST_CASE("backproject examples") {
  CameraIntrinsics c = test::small_camera();
  Point3 p = backproject({c.cx, c.cy}, 2.0, c);
  CHECK(p.isApprox(Point3(0, 0, 2.0)));

  p = backproject({c.cx + c.fx, c.cy}, 1.0, c);
  CHECK(p.x() == doctest::Approx(1.0));
  CHECK(p.y() == doctest::Approx(0.0));
  CHECK(p.z() == doctest::Approx(1.0));

  CameraIntrinsics hd;
  hd.width = 1920;
  hd.height = 1080;
  hd.fx = hd.fy = 800;
  hd.cx = 960;
  hd.cy = 540;
  p = backproject({640, 512}, 1.7, hd);
  CHECK(p.x() == doctest::Approx(-0.68).epsilon(1e-12));
  CHECK(p.y() == doctest::Approx(-0.0595).epsilon(1e-12));
  CHECK(p.z() == doctest::Approx(1.7));
}

TEST_CASE("backproject rejects bad depth") {
  CameraIntrinsics c = test::small_camera();
  for (double d : {0.0, -1.0, std::nan(""), static_cast<double>(INFINITY)}) {
    try {
      backproject({1, 1}, d, c);
      FAIL("expected throw");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_input);
    }
  }
}

TEST_CASE("project examples and errors") {
  CameraIntrinsics c = test::small_camera();
  PixelCoord px = project({0, 0, 1.5}, c);
  CHECK(px.u == doctest::Approx(c.cx));
  CHECK(px.v == doctest::Approx(c.cy));
  try {
    project({0.1, 0.1, 0.0}, c);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::behind_camera);
  }
}

TEST_CASE("project inverts backproject") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 63), v(0, 47), z(0.1, 10);
  CameraIntrinsics c = test::small_camera();
  for (int i = 0; i < 1000; ++i) {
    const PixelCoord q{u(rng), v(rng)};
    const PixelCoord r = project(backproject(q, z(rng), c), c);
    CHECK(std::abs(r.u - q.u) < 1e-9);
    CHECK(std::abs(r.v - q.v) < 1e-9);
  }
}

TEST_CASE("intrinsics validation") {
  CameraIntrinsics c = test::small_camera();
  CHECK_NOTHROW(c.validate());
  c.fx = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("fronto-parallel plane normals") {
  CameraIntrinsics c = test::small_camera();
  NormalMap n = normals_from_depth(test::flat_depth(c, 1.3), c);
  int valid = 0;
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      if (!n.valid(x, y)) continue;
      ++valid;
      CHECK(n.at(x, y).isApprox(Vec3(0, 0, -1), 1e-9));
    }
  CHECK(valid == (c.width - 2) * (c.height - 2));
  CHECK_FALSE(n.valid(0, 0));
}

TEST_CASE("plane tilted 45 degrees about the vertical axis") {
  CameraIntrinsics c = test::small_camera();
  // x + z = 1.5
  DepthMap d(c.width, c.height);
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) d.at(x, y) = static_cast<float>(1.5 / (1.0 + (x - c.cx) / c.fx));
  NormalMap n = normals_from_depth(d, c);
  const Vec3 expect(-std::sqrt(0.5), 0, -std::sqrt(0.5));
  for (int y = 1; y < c.height - 1; ++y)
    for (int x = 1; x < c.width - 1; ++x) {
      REQUIRE(n.valid(x, y));
      CHECK((n.at(x, y) - expect).norm() < 1e-4);
    }
}

TEST_CASE("depth spike leaves neighbors finite") {
  CameraIntrinsics c = test::small_camera();
  DepthMap d = test::flat_depth(c, 1.0);
  d.at(20, 20) = 5.0f;
  NormalMap n = normals_from_depth(d, c);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (!n.valid(20 + dx, 20 + dy)) continue;
      CHECK(std::abs(n.at(20 + dx, 20 + dy).norm() - 1.0) < 1e-6);
    }
  CHECK(n.valid(19, 20));
}

TEST_CASE("normals are unit and face the camera") {
  CameraIntrinsics c = test::small_camera();
  DepthMap d(c.width, c.height);
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) d.at(x, y) = static_cast<float>(1.0 + 0.3 * std::sin(0.1 * x) + 0.01 * y);
  NormalMap n = normals_from_depth(d, c);
  for (int y = 0; y < c.height; ++y)
    for (int x = 0; x < c.width; ++x) {
      if (!n.valid(x, y)) continue;
      CHECK(std::abs(n.at(x, y).norm() - 1.0) < 1e-6);
      const Point3 p = backproject({double(x), double(y)}, d.at(x, y), c);
      CHECK(n.at(x, y).dot(p) < 0.0);
    }
}

TEST_CASE("border normals fill from the interior") {
  CameraIntrinsics c = test::small_camera();
  DepthMap d = test::flat_depth(c, 1.0);
  NormalMap n = normals_from_depth(d, c);
  fill_border_normals(n, d);
  CHECK(n.valid(0, 0));
  CHECK(n.at(0, 0).isApprox(Vec3(0, 0, -1), 1e-9));
}

TEST_CASE("shading compensation") {
  const Vec3 n(0, 0, -1);
  auto r = shading_compensate(Rgb(0.2, 0.3, 0.1), n, {0, 0, 1});
  REQUIRE(r);
  CHECK((*r - Rgb(0.2, 0.3, 0.1)).abs().maxCoeff() < 1e-15);

  // cos = 0.5: normal 60 degrees off the view ray
  const Vec3 n60(std::sin(M_PI / 3), 0, -std::cos(M_PI / 3));
  r = shading_compensate(Rgb(0.2, 0.3, 0.1), n60, {0, 0, 1});
  REQUIRE(r);
  CHECK((*r - Rgb(0.4, 0.6, 0.2)).abs().maxCoeff() < 1e-12);

  const double t = std::acos(0.05);
  CHECK_FALSE(shading_compensate(Rgb(0.2, 0.3, 0.1), Vec3(std::sin(t), 0, -std::cos(t)), {0, 0, 1}));
}

TEST_CASE("shading compensation is homogeneous") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1), s(0.1, 10);
  for (int i = 0; i < 200; ++i) {
    const Rgb I(u(rng), u(rng), u(rng));
    const Vec3 n = Vec3(0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5), -1).normalized();
    const Point3 p(u(rng) - 0.5, u(rng) - 0.5, 1.0 + u(rng));
    const double k = s(rng);
    auto a = shading_compensate(k * I, n, p);
    auto b = shading_compensate(I, n, p);
    REQUIRE(a);
    REQUIRE(b);
    CHECK((*a - k * *b).abs().maxCoeff() < 1e-12);
  }
}

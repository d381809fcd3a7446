#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vlut/constraints.hpp"
#include "vlut/error.hpp"

using namespace vlut;

namespace {

Footprint random_footprint(const FrustumSpec& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> gx(0, s.nx - 1), gy(0, s.ny - 1), gz(0, s.nz - 1);
  return footprint(locate_grid(gx(rng), gy(rng), gz(rng), s));
}

std::vector<double> random_params(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.1, 1.5), b(0.0, 0.5);
  std::vector<double> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a(rng);
    x[n + i] = b(rng);
  }
  return x;
}

std::vector<double> dense(const Gradient& g, std::size_t size) {
  std::vector<double> d(size, 0.0);
  for (auto [i, v] : g) d[i] += v;
  return d;
}

// Central differences against the analytic gradient.
template <class F>
double jacobian_error(F&& r, std::vector<double> x, const Gradient& g) {
  const std::vector<double> an = dense(g, x.size());
  double worst = 0.0;
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double rp = r(x);
    x[i] = x0 - h;
    const double rm = r(x);
    x[i] = x0;
    worst = std::max(worst, std::abs((rp - rm) / (2 * h) - an[i]));
  }
  return worst;
}

// Block whose eight corners all sit on voxel 0.
Footprint single_cell() {
  Footprint f;
  f.corner.fill(0);
  f.t.fill(0.125);
  return f;
}

}  // namespace

TEST_CASE("known-color residual examples") {
  const std::size_t n = 1;
  std::vector<double> x = {0.5, 0.3};
  KnownColorBlock b{single_cell(), 0.8, 1.0, 1.0, 1.0};
  CHECK(known_color_residual(b, x, n) == doctest::Approx(0.0).epsilon(1e-15));
  b.I0 = 0.0;
  b.I = 0.3;
  CHECK(known_color_residual(b, x, n) == doctest::Approx(0.0).epsilon(1e-15));

  FrustumSpec s = test::small_spec(2, 2, 2);
  std::vector<double> y(2 * s.voxel_count(), 0.5);
  for (std::size_t i = s.voxel_count(); i < y.size(); ++i) y[i] = 0.3;
  KnownColorBlock kb{footprint(locate_grid(0.5, 0.5, 0.0, s)), 0.8, 1.0, 2.0, 1.0};
  const double r0 = known_color_residual(kb, y, s.voxel_count());
  const int corner = 0;
  REQUIRE(kb.f.t[corner] == doctest::Approx(0.25));
  y[kb.f.corner[corner]] += 0.1;
  CHECK(known_color_residual(kb, y, s.voxel_count()) - r0 == doctest::Approx(2.0 * 0.25 * 0.1 * 1.0));
}

TEST_CASE("correspondence residual degenerate solutions") {
  const std::size_t n = 1;
  CorrespondenceBlock b{single_cell(), single_cell(), 0.6, 0.6, 1.0, 1.0, 1.0};
  CHECK(correspondence_residual(b, {0.7, 0.2}, n) == doctest::Approx(0.0));
  b.I2 = 0.9;
  CHECK(correspondence_residual(b, {0.0, 0.2}, n) == 0.0);
  b.I1 = 0.2;
  b.I2 = 0.2;
  CHECK(correspondence_residual(b, {0.7, 0.2}, n) == doctest::Approx(0.0));
}

TEST_CASE("smooth, pure-water and normalization residuals") {
  CHECK(smooth_residual({0, 1, 1.0}, {0.7, 0.5}) == doctest::Approx(0.2));
  CHECK(smooth_residual({0, 1, 1.0}, {0.4, 0.4}) == 0.0);

  PureWaterBlock pw{single_cell(), 0.2, 1.0};
  CHECK(pure_water_residual(pw, {1.0, 0.15}, 1) == 0.0);
  CHECK(pure_water_residual(pw, {1.0, 0.3}, 1) == doctest::Approx(0.1));

  const std::size_t n = 8;
  std::vector<double> x(2 * n, 1.0 / n);
  CHECK(normalization_residual(0.5, x, n) == doctest::Approx(0.0).epsilon(1e-15));
  for (std::size_t i = 0; i < n; ++i) x[i] = 2.0 / n;
  CHECK(normalization_residual(0.5, x, n) == doctest::Approx(0.5));
  Gradient g;
  normalization_residual(0.5, x, n, &g);
  const auto d = dense(g, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(d[i] == 0.5);
    CHECK(d[n + i] == 0.0);
  }
}

TEST_CASE("analytic Jacobians match finite differences") {
  FrustumSpec s = test::small_spec(3, 3, 3);
  const std::size_t n = s.voxel_count();
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(0, 1), w(0.1, 5), bs(1.0, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto x = random_params(n, rng);
    Gradient g;
    switch (k % 4) {
      case 0: {
        const KnownColorBlock b{random_footprint(s, rng), u(rng), u(rng), w(rng), bs(rng)};
        known_color_residual(b, x, n, &g);
        worst = std::max(worst, jacobian_error([&](auto& v) { return known_color_residual(b, v, n); }, x, g));
        break;
      }
      case 1: {
        const CorrespondenceBlock b{random_footprint(s, rng), random_footprint(s, rng), u(rng), u(rng), w(rng),
                                    bs(rng), bs(rng)};
        correspondence_residual(b, x, n, &g);
        worst = std::max(worst, jacobian_error([&](auto& v) { return correspondence_residual(b, v, n); }, x, g));
        break;
      }
      case 2: {
        const SmoothBlock b{static_cast<std::uint32_t>(rng() % (2 * n)), static_cast<std::uint32_t>(rng() % (2 * n)),
                            w(rng)};
        if (b.a == b.b) continue;
        smooth_residual(b, x, &g);
        worst = std::max(worst, jacobian_error([&](auto& v) { return smooth_residual(b, v); }, x, g));
        break;
      }
      case 3: {
        // keep away from the hinge
        const PureWaterBlock b{random_footprint(s, rng), u(rng) < 0.5 ? 0.0 : 1.0, w(rng)};
        pure_water_residual(b, x, n, &g);
        worst = std::max(worst, jacobian_error([&](auto& v) { return pure_water_residual(b, v, n); }, x, g));
        break;
      }
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("known-color residual is affine and correspondence is bilinear") {
  FrustumSpec s = test::small_spec(3, 3, 3);
  const std::size_t n = s.voxel_count();
  std::mt19937_64 rng(59);
  for (int k = 0; k < 100; ++k) {
    const auto x1 = random_params(n, rng), x2 = random_params(n, rng);
    const double t = 0.37;
    std::vector<double> mix(2 * n);
    for (std::size_t i = 0; i < 2 * n; ++i) mix[i] = t * x1[i] + (1 - t) * x2[i];
    const KnownColorBlock kb{random_footprint(s, rng), 0.6, 0.8, 1.3, 1.2};
    CHECK(known_color_residual(kb, mix, n) ==
          doctest::Approx(t * known_color_residual(kb, x1, n) + (1 - t) * known_color_residual(kb, x2, n)));

    // Mixing only beta (alpha fixed) and only alpha (beta fixed).
    const CorrespondenceBlock cb{random_footprint(s, rng), random_footprint(s, rng), 0.5, 0.4, 1.0, 1.1, 1.4};
    for (int part = 0; part < 2; ++part) {
      std::vector<double> a = x1, b = x1, m = x1;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = part == 0 ? n + i : i;
        b[j] = x2[j];
        m[j] = t * a[j] + (1 - t) * b[j];
      }
      CHECK(correspondence_residual(cb, m, n) ==
            doctest::Approx(t * correspondence_residual(cb, a, n) + (1 - t) * correspondence_residual(cb, b, n)));
    }
  }
}

TEST_CASE("smooth lattice block counts") {
  auto count = [](int nx, int ny, int nz) {
    const FrustumSpec s = test::small_spec(nx, ny, nz);
    const SystemWeights w = make_weights(LookupTable(s, 1.0, 0.1));
    return smooth_lattice(s, w.smooth, 0).size();
  };
  CHECK(count(3, 3, 3) == 2u * 54u);
  CHECK(count(2, 2, 2) == 24u);
  CHECK(count(4, 3, 5) == 2u * (3 * 60 - 12 - 15 - 20));
  CHECK(count(1, 1, 1) == 0u);

  // Brute-force enumeration of unordered 6-neighbor pairs.
  const FrustumSpec s = test::small_spec(3, 4, 2);
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.voxel_count(); ++i)
    for (std::size_t j = i + 1; j < s.voxel_count(); ++j) {
      const auto a = s.unflatten(i), b = s.unflatten(j);
      const int d = std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
      pairs += d == 1;
    }
  CHECK(count(3, 4, 2) == 2 * pairs);
}

TEST_CASE("constant field zeroes smooth residuals") {
  const FrustumSpec s = test::small_spec(3, 3, 3);
  const SystemWeights w = make_weights(LookupTable(s, 1.0, 0.1));
  const LookupTable lut(s, 0.6, 0.2);
  const auto x = pack_channel(lut, 1);
  for (const auto& b : smooth_lattice(s, w.smooth, 1)) CHECK(smooth_residual(b, x) == 0.0);
}

TEST_CASE("build system") {
  FrustumSpec s = test::small_spec(1, 1, 1);
  const SystemWeights w = make_weights(LookupTable(s, 1.0, 0.1));
  Observation o;
  o.p = {0, 0, 1.0};
  o.color = o.raw = Rgb(0.5, 0.4, 0.3);
  o.known_albedo = Rgb::Ones();
  const ConstraintSystem sys = build_system({o}, {}, {}, s, w);
  for (int c = 0; c < 3; ++c) {
    CHECK(sys.channels[c].known_color.size() == 1);
    CHECK(sys.channels[c].smooth.empty());
    CHECK_FALSE(sys.channels[c].normalization);
  }
  CHECK(sys.support[0] == doctest::Approx(1.0));

  try {
    build_system({}, {}, {}, s, w);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unconstrained_system);
  }
  Observation plain = o;
  plain.known_albedo.reset();
  CHECK_THROWS_AS(build_system({plain}, {}, {}, s, w), Error);

  const FrustumSpec s2 = test::small_spec(2, 2, 2);
  const ConstraintSystem cs =
      build_system({}, {{o, o}}, {{0, 0, Rgb::Constant(0.3)}}, s2, make_weights(LookupTable(s2, 1.0, 0.1)),
                   CalibrationMode::correspondence_only);
  CHECK(cs.channels[0].smooth.size() == 24);
  CHECK(cs.channels[0].correspondence.size() == 1);
  CHECK(cs.channels[0].pure_water.size() == 2);
  CHECK(cs.channels[0].normalization);
  CHECK(cs.channels[0].w_n == doctest::Approx(10.0 / std::sqrt(8.0)));
}

TEST_CASE("pack and unpack round trip") {
  FrustumSpec s = test::small_spec();
  std::mt19937_64 rng(61);
  LookupTable lut = test::random_lut(s, rng);
  LookupTable copy(s);
  for (int c = 0; c < 3; ++c) unpack_channel(copy, c, pack_channel(lut, c));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < lut.voxel_count(); ++i) {
      CHECK(copy.alpha(c)[i] == lut.alpha(c)[i]);
      CHECK(copy.beta(c)[i] == lut.beta(c)[i]);
    }
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vlut/error.hpp"
#include "vlut/simulate.hpp"
#include "vlut/solver.hpp"

using namespace vlut;

namespace {

Footprint single_cell() {
  Footprint f;
  f.corner.fill(0);
  f.t.fill(0.125);
  return f;
}

// One voxel seen on a white and a black target.
ConstraintSystem two_lines() {
  ConstraintSystem sys;
  sys.spec = test::small_spec(1, 1, 1);
  sys.support = {2.0};
  for (auto& ch : sys.channels) {
    ch.known_color.push_back({single_cell(), 0.8, 1.0, 1.0, 1.0});
    ch.known_color.push_back({single_cell(), 0.3, 0.0, 1.0, 1.0});
  }
  return sys;
}

struct Synthetic {
  FrustumSpec spec;
  LookupTable truth;
  std::vector<Observation> obs;
};

// Observations generated by the trilinear forward model of a table, so the
// table is an exact fit.
Synthetic synthetic(int per_voxel, std::uint64_t seed) {
  Synthetic s;
  s.spec = test::small_spec(4, 3, 10, 0.5, 2.5);
  s.spec.intr = test::small_camera(160, 120);
  s.truth = sim::ground_truth_lut(s.spec, sim::reference_medium(sim::WaterParams::clear()));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, s.spec.intr.width - 1), v(0, s.spec.intr.height - 1),
      z(s.spec.z_near, s.spec.z_far), alb(0.05, 0.95);
  const int n = per_voxel * static_cast<int>(s.spec.voxel_count());
  for (int i = 0; i < n; ++i) {
    Observation o;
    o.p = backproject({u(rng), v(rng)}, z(rng), s.spec.intr);
    const Rgb albedo(alb(rng), alb(rng), alb(rng));
    const SampledParams sp = s.truth.sample(o.p);
    o.color = o.raw = sp.alpha * albedo + sp.beta;
    o.known_albedo = albedo;
    s.obs.push_back(o);
  }
  return s;
}

double level_cost(const ChannelReport& r) { return r.final_cost; }

}  // namespace

TEST_CASE("two known-color lines intersect at (0.5, 0.3)") {
  const ConstraintSystem sys = two_lines();
  LookupTable init(sys.spec, 1.0, 0.05);
  SolveOptions opts;
  auto [lut, rep] = solve_level(sys, init, opts);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(lut.alpha(c)[0] - 0.5) < 1e-9);
    CHECK(std::abs(lut.beta(c)[0] - 0.3) < 1e-9);
  }
  CHECK(lut.obs_count()[0] == 2.0);
}

TEST_CASE("start at the solution") {
  const ConstraintSystem sys = two_lines();
  LookupTable init(sys.spec, 0.5, 0.3);
  auto [lut, rep] = solve_level(sys, init, {});
  for (int c = 0; c < 3; ++c) {
    const ChannelReport& r = rep.levels[0].channels[c];
    CHECK(r.iterations <= 1);
    CHECK(std::abs(r.final_cost - r.initial_cost) <= 1e-12);
    CHECK(lut.alpha(c)[0] == doctest::Approx(0.5).epsilon(1e-12));
  }

  const Synthetic s = synthetic(20, 67);
  ConstraintSystem big = build_system(s.obs, {}, {}, s.spec, make_weights(s.truth));
  for (auto& ch : big.channels) ch.smooth.clear();
  auto [lut2, rep2] = solve_level(big, s.truth, {});
  for (int c = 0; c < 3; ++c) {
    CHECK(rep2.levels[0].channels[c].iterations <= 1);
    CHECK(rep2.levels[0].channels[c].final_cost <= 1e-12);
  }
}

TEST_CASE("model-consistent 4x3x10 system is recovered") {
  const Synthetic s = synthetic(40, 71);
  // Without the smoothness prior the truth is the exact minimizer; with it the
  // faint far slabs are pulled toward their neighbors.
  ConstraintSystem sys = build_system(s.obs, {}, {}, s.spec, make_weights(s.truth));
  for (auto& ch : sys.channels) ch.smooth.clear();
  SolveOptions opts;
  opts.max_iterations = 100;
  const LookupTable init = initial_table({s.obs, {}, {}}, s.spec, opts);
  auto [lut, rep] = solve_level(sys, init, opts);
  double worst = 0.0;
  int checked = 0;
  for (std::size_t i = 0; i < lut.voxel_count(); ++i) {
    if (lut.obs_count()[i] < 8) continue;
    ++checked;
    for (int c = 0; c < 3; ++c) {
      worst = std::max(worst, std::abs(lut.alpha(c)[i] - s.truth.alpha(c)[i]) / s.truth.alpha(c)[i]);
      worst = std::max(worst, std::abs(lut.beta(c)[i] - s.truth.beta(c)[i]) / std::max(s.truth.beta(c)[i], 1e-2));
    }
  }
  CHECK(checked > 0);
  CHECK(worst < 1e-3);
}

TEST_CASE("accepted costs decrease strictly") {
  const Synthetic s = synthetic(20, 83);
  const ConstraintSystem sys = build_system(s.obs, {}, {}, s.spec, make_weights(s.truth));
  SolveOptions opts;
  auto [lut, rep] = solve_level(sys, initial_table({s.obs, {}, {}}, s.spec, opts), opts);
  for (int c = 0; c < 3; ++c) {
    const auto& costs = rep.levels[0].channels[c].accepted_costs;
    REQUIRE_FALSE(costs.empty());
    CHECK(costs.front() < rep.levels[0].channels[c].initial_cost);
    for (std::size_t k = 1; k < costs.size(); ++k) CHECK(costs[k] < costs[k - 1]);
    CHECK(level_cost(rep.levels[0].channels[c]) == costs.back());
  }
}

TEST_CASE("solve is deterministic") {
  const Synthetic s = synthetic(10, 73);
  const ConstraintSystem sys = build_system(s.obs, {}, {}, s.spec, make_weights(s.truth));
  const LookupTable init(s.spec, 0.5, 0.05);
  const auto a = solve_level(sys, init, {}).first.serialize();
  const auto b = solve_level(sys, init, {}).first.serialize();
  CHECK(a == b);
}

TEST_CASE("hierarchical schedule") {
  const Synthetic s = synthetic(10, 79);
  const CalibrationInputs in{s.obs, {}, {}};
  SolveOptions opts;
  opts.pyramid = {{2, 2, 5}, {4, 3, 10}};
  auto [lut, rep] = calibrate_hierarchical(in, s.spec, opts);
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.levels[0].dims == std::array<int, 3>{2, 2, 5});
  CHECK(lut.spec() == s.spec);
  CHECK(rep.supported_voxels > 0);

  // A one-level schedule is a direct solve from the initial table.
  SolveOptions one;
  auto [direct, drep] = calibrate_hierarchical(in, s.spec, one);
  CHECK(drep.levels.size() == 1);

  SolveOptions bad;
  bad.pyramid = {{4, 3, 10}, {2, 2, 5}};
  CHECK_THROWS_AS(calibrate_hierarchical(in, s.spec, bad), Error);
  bad.pyramid = {{2, 2, 5}};
  CHECK_THROWS_AS(calibrate_hierarchical(in, s.spec, bad), Error);
  try {
    calibrate_hierarchical({}, s.spec, one);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unconstrained_system);
  }
}

TEST_CASE("parameters stay above the positivity floor") {
  // Data that would drive beta negative.
  ConstraintSystem sys;
  sys.spec = test::small_spec(1, 1, 1);
  sys.support = {2.0};
  for (auto& ch : sys.channels) {
    ch.known_color.push_back({single_cell(), 0.2, 1.0, 1.0, 1.0});
    ch.known_color.push_back({single_cell(), 1.0, 2.0, 1.0, 1.0});
  }
  SolveOptions opts;
  auto [lut, rep] = solve_level(sys, LookupTable(sys.spec, 1.0, 0.1), opts);
  for (int c = 0; c < 3; ++c) {
    CHECK(lut.alpha(c)[0] >= opts.epsilon);
    CHECK(lut.beta(c)[0] >= opts.epsilon);
  }
}

TEST_CASE("fix_scale") {
  FrustumSpec s = test::small_spec(2, 2, 2);
  LookupTable lut(s, 1.0 / 8, 0.0);
  for (double& o : lut.obs_count()) o = 3;
  const LookupTable same = fix_scale(lut, {1, 0, 1}, Rgb::Constant(1.0 / 8));
  CHECK(same.serialize() == lut.serialize());

  const LookupTable half = fix_scale(lut, {1, 0, 1}, Rgb::Constant(0.5));
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < half.voxel_count(); ++i) {
      CHECK(half.alpha(c)[i] == doctest::Approx(0.5));
      CHECK(half.beta(c)[i] == 0.0);
    }

  auto code = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::invalid_input;
  };
  CHECK(code([&] { fix_scale(lut, {2, 0, 0}, Rgb::Ones()); }) == Errc::invalid_anchor);
  CHECK(code([&] { fix_scale(lut, {0, 0, 0}, Rgb::Zero()); }) == Errc::invalid_anchor);
  LookupTable tiny = lut;
  tiny.alpha(0)[0] = 1e-9;
  CHECK(code([&] { fix_scale(tiny, {0, 0, 0}, Rgb::Ones()); }) == Errc::invalid_anchor);
  LookupTable unseen = lut;
  unseen.obs_count()[0] = 0;
  CHECK(code([&] { fix_scale(unseen, {0, 0, 0}, Rgb::Ones()); }) == Errc::invalid_anchor);
}

TEST_CASE("pure-water clamp") {
  FrustumSpec s = test::small_spec(2, 2, 3);
  LookupTable lut(s, 1.0, 0.4);
  clamp_to_pure_water(lut, {{0, 0, Rgb::Constant(0.25)}, {1, 1, Rgb::Constant(0.5)}});
  for (int z = 0; z < s.nz; ++z) {
    CHECK(lut.beta(0)[s.flat_index(0, 0, z)] == 0.25);
    CHECK(lut.beta(0)[s.flat_index(1, 1, z)] == 0.4);
    CHECK(lut.beta(0)[s.flat_index(1, 0, z)] == 0.4);
  }
}

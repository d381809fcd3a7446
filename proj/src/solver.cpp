#include "vlut/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "vlut/error.hpp"
#include "vlut/parallel.hpp"

namespace vlut {
namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Clock = std::chrono::steady_clock;

constexpr double kLambdaMax = 1e12;
// Above this many unknowns the damped system is solved iteratively; direct
// factorization of the 3-D lattice fills in too much.
constexpr int kDirectLimit = 6000;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Linearization {
  SpMat J;                // sparse rows, active columns only
  Eigen::VectorXd r;
  Eigen::VectorXd g_norm;  // gradient of the normalization residual (may be empty)
  double r_norm = 0.0;
};

class ChannelProblem {
 public:
  ChannelProblem(const ChannelSystem& sys, std::size_t n_voxels, bool fix_beta)
      : sys_(sys), n_(n_voxels), active_(2 * n_voxels, -1) {
    int k = 0;
    for (std::size_t i = 0; i < 2 * n_; ++i)
      if (i < n_ || !fix_beta) active_[i] = k++;
    n_active_ = k;
  }

  int n_active() const { return n_active_; }
  bool is_active(std::size_t i) const { return active_[i] >= 0; }
  int active_index(std::size_t i) const { return active_[i]; }
  double cost(const std::vector<double>& x) const { return channel_cost(sys_, x, n_).total(); }

  Linearization linearize(const std::vector<double>& x) const {
    Linearization L;
    const std::size_t rows = sys_.residual_count() - (sys_.normalization ? 1 : 0);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows * 8);
    L.r.resize(static_cast<Eigen::Index>(rows));
    Gradient g;
    std::size_t row = 0;
    auto emit = [&](double r) {
      L.r[static_cast<Eigen::Index>(row)] = r;
      for (const auto& [idx, v] : g)
        if (active_[idx] >= 0) trip.emplace_back(static_cast<int>(row), active_[idx], v);
      g.clear();
      ++row;
    };
    for (const auto& b : sys_.known_color) emit(known_color_residual(b, x, n_, &g));
    for (const auto& b : sys_.correspondence) emit(correspondence_residual(b, x, n_, &g));
    for (const auto& b : sys_.smooth) emit(smooth_residual(b, x, &g));
    for (const auto& b : sys_.pure_water) emit(pure_water_residual(b, x, n_, &g));
    L.J.resize(static_cast<Eigen::Index>(rows), n_active_);
    L.J.setFromTriplets(trip.begin(), trip.end());
    if (sys_.normalization) {
      L.r_norm = normalization_residual(sys_.w_n, x, n_, &g);
      L.g_norm = Eigen::VectorXd::Zero(n_active_);
      for (const auto& [idx, v] : g)
        if (active_[idx] >= 0) L.g_norm[active_[idx]] += v;
      g.clear();
    }
    return L;
  }

 private:
  const ChannelSystem& sys_;
  std::size_t n_;
  std::vector<int> active_;
  int n_active_ = 0;
};

ChannelReport solve_channel(const ChannelSystem& sys, std::size_t n_voxels, std::vector<double>& x,
                            const SolveOptions& opts) {
  const ChannelProblem prob(sys, n_voxels, opts.fix_beta);
  ChannelReport rep;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (prob.is_active(i)) x[i] = std::max(x[i], opts.epsilon);
  double cost = prob.cost(x);
  rep.initial_cost = cost;
  double lambda = opts.lambda0;
  bool relinearize = true;
  Linearization L;
  SpMat H;
  Eigen::VectorXd grad, diag;
  while (rep.iterations < opts.max_iterations && cost > 0.0) {
    if (relinearize) {
      L = prob.linearize(x);
      H = SpMat(L.J.transpose()) * L.J;
      grad = L.J.transpose() * L.r;
      diag = H.diagonal();
      if (L.g_norm.size() > 0) {
        grad += L.g_norm * L.r_norm;
        diag += L.g_norm.cwiseAbs2();
      }
      const double dmax = diag.size() > 0 ? diag.maxCoeff() : 1.0;
      for (Eigen::Index i = 0; i < diag.size(); ++i)
        if (!(diag[i] > 1e-12 * dmax)) diag[i] = std::max(1e-12 * dmax, 1e-30);
      relinearize = false;
    }
    ++rep.iterations;
    // Parameters resting on the positivity floor whose gradient points further
    // down are frozen for this step; the clamp would undo their update anyway.
    Eigen::VectorXd free = Eigen::VectorXd::Ones(grad.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const int k = prob.active_index(i);
      if (k >= 0 && x[i] <= opts.epsilon * (1.0 + 1e-9) && grad[k] > 0.0) free[k] = 0.0;
    }
    SpMat A = free.asDiagonal() * H * free.asDiagonal();
    for (Eigen::Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += lambda * diag[i] * free[i] + (1.0 - free[i]);
    const Eigen::VectorXd rhs = free.cwiseProduct(grad);
    const Eigen::VectorXd u = L.g_norm.size() > 0 ? Eigen::VectorXd(free.cwiseProduct(L.g_norm)) : Eigen::VectorXd();
    Eigen::VectorXd delta;
    bool ok = false;
    if (A.rows() <= kDirectLimit) {
      Eigen::SimplicialLDLT<SpMat> ldlt(A);
      ok = ldlt.info() == Eigen::Success;
      if (ok) {
        delta = ldlt.solve(-rhs);
        if (u.size() > 0) {
          // (A + g g^T) delta = -grad via Sherman-Morrison
          const Eigen::VectorXd v = ldlt.solve(u);
          delta -= v * (u.dot(delta) / (1.0 + u.dot(v)));
        }
        ok = ldlt.info() == Eigen::Success && delta.allFinite();
      }
    } else {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(opts.cg_tolerance);
      cg.setMaxIterations(opts.cg_max_iterations);
      cg.compute(A);
      delta = cg.solve(-rhs);
      if (u.size() > 0) {
        const Eigen::VectorXd v = cg.solve(u);
        delta -= v * (u.dot(delta) / (1.0 + u.dot(v)));
      }
      ok = cg.info() != Eigen::NumericalIssue && delta.allFinite();
    }
    if (ok) {
      std::vector<double> cand = x;
      for (std::size_t i = 0; i < x.size(); ++i)
        if (prob.is_active(i)) cand[i] = std::max(x[i] + delta[prob.active_index(i)], opts.epsilon);
      const double c_new = prob.cost(cand);
      if (c_new < cost) {
        const double rel = (cost - c_new) / cost;
        x = std::move(cand);
        cost = c_new;
        rep.accepted_costs.push_back(cost);
        ++rep.accepted;
        lambda = std::max(lambda * opts.lambda_down, 1e-15);
        relinearize = true;
        if (rel < opts.tolerance) {
          rep.converged = true;
          break;
        }
        continue;
      }
    }
    ++rep.rejected;
    lambda *= opts.lambda_up;
    if (lambda > kLambdaMax) {
      // No descent direction left at any damping; keep the best iterate.
      rep.converged = rep.accepted > 0;
      rep.degenerate = rep.accepted == 0 && !ok;
      break;
    }
  }
  if (cost == 0.0) rep.converged = true;
  rep.final_cost = cost;
  return rep;
}

LookupTable scaled(LookupTable lut, double s) {
  for (int c = 0; c < 3; ++c) {
    for (double& a : lut.alpha(c)) a *= s;
    for (double& b : lut.beta(c)) b *= s;
  }
  return lut;
}

void summarize_support(SolveReport& rep, const LookupTable& lut) {
  rep.voxels = lut.voxel_count();
  rep.supported_voxels = rep.well_supported_voxels = 0;
  rep.max_support = 0.0;
  for (double s : lut.obs_count()) {
    if (s > 0.0) ++rep.supported_voxels;
    if (s >= 8.0) ++rep.well_supported_voxels;
    rep.max_support = std::max(rep.max_support, s);
  }
}

}  // namespace

nlohmann::json SolveReport::to_json() const {
  using nlohmann::json;
  json levels_j = json::array();
  for (const LevelReport& l : levels) {
    json ch = json::array();
    for (const ChannelReport& c : l.channels)
      ch.push_back({{"initial_cost", c.initial_cost},
                    {"final_cost", c.final_cost},
                    {"iterations", c.iterations},
                    {"accepted", c.accepted},
                    {"rejected", c.rejected},
                    {"converged", c.converged},
                    {"degenerate", c.degenerate}});
    levels_j.push_back({{"dims", {l.dims[0], l.dims[1], l.dims[2]}},
                        {"observations", l.observations},
                        {"pairs", l.pairs},
                        {"pure_water_rays", l.pure_water_rays},
                        {"seconds", l.seconds},
                        {"channels", ch}});
  }
  return {{"levels", levels_j},
          {"support",
           {{"voxels", voxels},
            {"supported", supported_voxels},
            {"well_supported", well_supported_voxels},
            {"max", max_support}}},
          {"hinge_after_clamp", hinge_after_clamp},
          {"wall_seconds", wall_seconds}};
}

std::pair<LookupTable, SolveReport> solve_level(const ConstraintSystem& system, const LookupTable& init,
                                                const SolveOptions& opts) {
  if (!(init.spec() == system.spec))
    throw Error(Errc::invalid_argument, "initial table and constraint system have different grids");
  const auto t0 = Clock::now();
  LookupTable lut = init;
  LevelReport level;
  level.dims = {system.spec.nx, system.spec.ny, system.spec.nz};
  level.observations = system.channels[0].known_color.size();
  level.pairs = system.channels[0].correspondence.size();
  level.pure_water_rays = system.channels[0].pure_water.size() / static_cast<std::size_t>(system.spec.nz);
  std::array<std::vector<double>, 3> x;
  for (int c = 0; c < 3; ++c) {
    x[c] = pack_channel(lut, c);
    if (opts.fix_beta) std::fill(x[c].begin() + static_cast<std::ptrdiff_t>(lut.voxel_count()), x[c].end(), 0.0);
  }
  parallel_for(3, [&](int c) { level.channels[c] = solve_channel(system.channels[c], system.n_voxels(), x[c], opts); });
  for (int c = 0; c < 3; ++c) unpack_channel(lut, c, x[c]);
  std::copy(system.support.begin(), system.support.end(), lut.obs_count().begin());
  level.seconds = seconds_since(t0);
  SolveReport rep;
  rep.levels.push_back(level);
  summarize_support(rep, lut);
  rep.wall_seconds = level.seconds;
  return {std::move(lut), std::move(rep)};
}

LookupTable initial_table(const CalibrationInputs& inputs, const FrustumSpec& spec, const SolveOptions& opts) {
  std::vector<Rgb> sum(spec.nz, Rgb::Zero()), lo(spec.nz, Rgb::Constant(INFINITY));
  std::vector<int> count(spec.nz, 0);
  auto add = [&](const Observation& o) {
    const int z = std::clamp(locate(o.p, spec, LocateMode::clamp).nearest()[2], 0, spec.nz - 1);
    sum[z] += o.color;
    lo[z] = lo[z].min(o.color);
    ++count[z];
  };
  if (opts.mode == CalibrationMode::known_color) {
    for (const auto& o : inputs.observations)
      if (o.known_albedo) add(o);
  }
  for (const auto& p : inputs.pairs) {
    add(p.a);
    add(p.b);
  }
  LookupTable lut(spec);
  for (int z = 0; z < spec.nz; ++z) {
    int src = -1;  // nearest slab with data
    for (int d = 0; d < spec.nz && src < 0; ++d) {
      if (z - d >= 0 && count[z - d] > 0) src = z - d;
      else if (z + d < spec.nz && count[z + d] > 0) src = z + d;
    }
    Rgb a0 = Rgb::Ones(), b0 = Rgb::Zero();
    if (src >= 0) {
      a0 = (sum[src] / count[src] / kSceneIntensity).max(opts.epsilon).min(5.0);
      b0 = 0.5 * lo[src];
    }
    if (opts.fix_beta) b0 = Rgb::Zero();
    for (int y = 0; y < spec.ny; ++y)
      for (int x = 0; x < spec.nx; ++x)
        for (int c = 0; c < 3; ++c) {
          lut.alpha(c)[spec.flat_index(x, y, z)] = a0[c];
          lut.beta(c)[spec.flat_index(x, y, z)] = std::max(b0[c], opts.fix_beta ? 0.0 : opts.epsilon);
        }
  }
  return lut;
}

void clamp_to_pure_water(LookupTable& lut, const std::vector<PureWaterRay>& rays) {
  const FrustumSpec& s = lut.spec();
  for (const PureWaterRay& r : rays)
    for (int z = 0; z < s.nz; ++z)
      for (int c = 0; c < 3; ++c) {
        double& b = lut.beta(c)[s.flat_index(r.x, r.y, z)];
        b = std::min(b, std::max(r.intensity[c], 0.0));
      }
}

std::pair<LookupTable, SolveReport> calibrate_hierarchical(const CalibrationInputs& inputs,
                                                           const FrustumSpec& target, const SolveOptions& opts) {
  const auto t0 = Clock::now();
  target.validate();
  std::vector<std::array<int, 3>> pyramid = opts.pyramid;
  if (pyramid.empty()) pyramid.push_back({target.nx, target.ny, target.nz});
  for (std::size_t i = 0; i < pyramid.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      if (pyramid[i][a] < 1) throw Error(Errc::invalid_argument, "pyramid dimensions must be >= 1");
      if (i > 0 && pyramid[i][a] < pyramid[i - 1][a])
        throw Error(Errc::invalid_argument, "pyramid levels must not shrink along any axis");
    }
  }
  if (pyramid.back() != std::array<int, 3>{target.nx, target.ny, target.nz})
    throw Error(Errc::invalid_argument, "last pyramid level must equal the target resolution");
  if (inputs.observations.empty() && inputs.pairs.empty())
    throw Error(Errc::unconstrained_system, "no known-color observations or correspondence pairs");

  const FrustumSpec spec0 = target.with_resolution(pyramid[0][0], pyramid[0][1], pyramid[0][2]);
  LookupTable init = initial_table(inputs, spec0, opts);

  // The reference table is matched in overall power to the data: its slab-0
  // green mean alpha equals the initial estimate there.
  const LookupTable ref0 = sim::ground_truth_lut(spec0, opts.reference);
  double ref_mean = 0.0, init_mean = 0.0;
  const std::size_t lateral0 = static_cast<std::size_t>(spec0.nx) * spec0.ny;
  for (std::size_t i = 0; i < lateral0; ++i) {
    ref_mean += ref0.alpha(1)[i];
    init_mean += init.alpha(1)[i];
  }
  const double ref_scale = ref_mean > 0.0 ? init_mean / ref_mean : 1.0;

  if (opts.mode == CalibrationMode::correspondence_only) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (double a : init.alpha(c)) s += a;
      for (double& a : init.alpha(c)) a /= s;
    }
  }

  SolveReport report;
  LookupTable current;
  std::vector<PureWaterRay> rays;
  for (std::size_t li = 0; li < pyramid.size(); ++li) {
    const FrustumSpec spec = target.with_resolution(pyramid[li][0], pyramid[li][1], pyramid[li][2]);
    const auto obs = cap_per_voxel(inputs.observations, spec, opts.voxel_cap);
    const auto pairs = cap_per_voxel(inputs.pairs, spec, opts.voxel_cap);
    rays = (opts.use_pure_water && !opts.fix_beta) ? pure_water_rays(inputs.pure_water, spec)
                                                   : std::vector<PureWaterRay>{};
    const SystemWeights weights = make_weights(scaled(sim::ground_truth_lut(spec, opts.reference), ref_scale));
    const ConstraintSystem sys = build_system(obs, pairs, rays, spec, weights, opts.mode);
    const LookupTable start = li == 0 ? init : current.upsample(spec.nx, spec.ny, spec.nz);
    auto [lut, rep] = solve_level(sys, start, opts);
    current = std::move(lut);
    report.levels.push_back(rep.levels.front());
  }
  if (!rays.empty()) {
    clamp_to_pure_water(current, rays);
    const FrustumSpec& s = current.spec();
    for (int c = 0; c < 3; ++c) {
      const std::vector<double> x = pack_channel(current, c);
      for (const PureWaterRay& r : rays)
        for (int z = 0; z < s.nz; ++z)
          report.hinge_after_clamp += std::pow(
              pure_water_residual({footprint(locate_grid(r.x, r.y, z, s)), r.intensity[c]}, x, s.voxel_count()), 2);
    }
  }
  summarize_support(report, current);
  report.wall_seconds = seconds_since(t0);
  return {std::move(current), std::move(report)};
}

LookupTable fix_scale(const LookupTable& lut, std::array<int, 3> anchor, const Rgb& alpha_abs, double epsilon) {
  const FrustumSpec& s = lut.spec();
  const auto [x, y, z] = anchor;
  if (x < 0 || y < 0 || z < 0 || x >= s.nx || y >= s.ny || z >= s.nz)
    throw Error(Errc::invalid_anchor, "anchor voxel lies outside the grid");
  const std::size_t i = s.flat_index(x, y, z);
  if (!(lut.obs_count()[i] > 0.0)) throw Error(Errc::invalid_anchor, "anchor voxel has no observation support");
  LookupTable out = lut;
  for (int c = 0; c < 3; ++c) {
    const double a = lut.alpha(c)[i];
    if (!(a >= epsilon)) throw Error(Errc::invalid_anchor, "anchor alpha is below the positivity floor");
    if (!(alpha_abs[c] > 0.0) || !std::isfinite(alpha_abs[c]))
      throw Error(Errc::invalid_anchor, "absolute anchor alpha must be positive");
    const double scale = alpha_abs[c] / a;
    for (double& v : out.alpha(c)) v *= scale;
  }
  return out;
}

}  // namespace vlut

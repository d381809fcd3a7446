#include "vlut/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vlut/error.hpp"
#include "vlut/eval.hpp"
#include "vlut/pipeline.hpp"
#include "vlut/restore.hpp"
#include "vlut/simulate.hpp"
#include "vlut/solver.hpp"

namespace vlut::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(item);
  return out;
}

std::array<int, 3> parse_dims(const std::string& s) {
  const auto parts = split(s, 'x');
  if (parts.size() != 3) throw UsageError("resolution '" + s + "' must look like NXxNYxNZ");
  std::array<int, 3> d{};
  for (int i = 0; i < 3; ++i) {
    try {
      d[i] = std::stoi(parts[i]);
    } catch (const std::exception&) {
      throw UsageError("resolution '" + s + "' must look like NXxNYxNZ");
    }
    if (d[i] < 1) throw UsageError("resolution '" + s + "' has a non-positive axis");
  }
  return d;
}

std::vector<std::array<int, 3>> parse_pyramid(const std::string& s) {
  std::vector<std::array<int, 3>> out;
  for (const auto& level : split(s, ',')) out.push_back(parse_dims(level));
  if (out.empty()) throw UsageError("empty pyramid");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, std::size_t n, const char* what) {
  const auto parts = split(s, ',');
  if (parts.size() != n) throw UsageError(std::string(what) + " needs " + std::to_string(n) + " comma-separated values");
  std::vector<T> out;
  try {
    for (const auto& p : parts) {
      if constexpr (std::is_integral_v<T>) out.push_back(static_cast<T>(std::stol(p)));
      else out.push_back(static_cast<T>(std::stod(p)));
    }
  } catch (const std::exception&) {
    throw UsageError(std::string("cannot parse ") + what + " '" + s + "'");
  }
  return out;
}

sim::WaterParams water_by_name(const std::string& name) {
  if (name == "clear") return sim::WaterParams::clear();
  if (name == "turbid") return sim::WaterParams::turbid();
  if (name == "in_air") return sim::WaterParams::in_air();
  throw UsageError("unknown reference water '" + name + "' (clear, turbid, in_air)");
}

// Values from --config become option defaults; explicit flags win.
json read_config(int argc, const char* const* argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) != "--config") continue;
    std::ifstream in(argv[i + 1]);
    if (!in) throw UsageError(std::string("cannot open config ") + argv[i + 1]);
    try {
      json j;
      in >> j;
      if (!j.is_object()) throw UsageError("config must be a JSON object");
      return j;
    } catch (const json::exception& e) {
      throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  return json::object();
}

class Binder {
 public:
  Binder(CLI::App* app, const json& config) : app_(app), config_(config) {}

  template <typename T>
  CLI::Option* add(const std::string& key, T& target, const std::string& help, bool required = false) {
    bool from_config = false;
    if (config_.contains(key)) {
      try {
        target = config_[key].get<T>();
      } catch (const json::exception&) {
        throw UsageError("config key '" + key + "' has the wrong type");
      }
      from_config = true;
    }
    CLI::Option* opt = app_->add_option("--" + dashed(key), target, help);
    if (required && !from_config) opt->required();
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& target, const std::string& help) {
    if (config_.contains(key)) {
      if (!config_[key].is_boolean()) throw UsageError("config key '" + key + "' must be a boolean");
      target = config_[key].get<bool>();
    }
    return app_->add_flag("--" + dashed(key), target, help);
  }

 private:
  static std::string dashed(std::string s) {
    for (char& c : s)
      if (c == '_') c = '-';
    return s;
  }
  CLI::App* app_;
  const json& config_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << text;
}

struct SimulateArgs {
  std::string recipe, out;
  std::uint64_t seed = 0;
  int width = 0, height = 0;
  double noise = -1.0;
  bool no_quantize = false;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto& names = sim::recipe_names();
  if (std::find(names.begin(), names.end(), a.recipe) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw Error(Errc::invalid_argument, "unknown recipe '" + a.recipe + "' (available: " + list + ")");
  }
  sim::RecipeOptions o;
  o.recipe = a.recipe;
  o.seed = a.seed;
  if (a.width > 0) o.width = a.width;
  if (a.height > 0) o.height = a.height;
  if (a.noise >= 0.0) o.noise_sigma = a.noise;
  if (a.no_quantize) o.quantize = false;
  const FrameManifest m = sim::make_dataset(o, a.out);
  std::cout << "wrote " << m.frames.size() << " frames to " << a.out << "\n";
  return 0;
}

struct CalibrateArgs {
  std::string manifest, out, mode = "known_color", pyramid = "4x3x10,40x30x10", samples = "40x30";
  std::string anchor_voxel, anchor_alpha, reference_water = "clear";
  bool no_pure_water = false, in_air = false;
  double z_near = 0.0, z_far = 0.0;
  int superpixels = 300, voxel_cap = 50, max_iterations = 50;
};

int cmd_calibrate(const CalibrateArgs& a) {
  SolveOptions opts;
  if (a.mode == "known_color") opts.mode = CalibrationMode::known_color;
  else if (a.mode == "correspondence_only") opts.mode = CalibrationMode::correspondence_only;
  else throw UsageError("unknown mode '" + a.mode + "' (known_color, correspondence_only)");
  opts.pyramid = parse_pyramid(a.pyramid);
  opts.fix_beta = a.in_air;
  opts.use_pure_water = !a.no_pure_water;
  opts.voxel_cap = a.voxel_cap;
  opts.max_iterations = a.max_iterations;
  opts.reference = sim::reference_medium(water_by_name(a.reference_water));
  const auto samples = split(a.samples, 'x');
  if (samples.size() != 2) throw UsageError("--samples must look like NXxNY");
  ExtractOptions ex;
  try {
    ex.samples.grid_x = std::stoi(samples[0]);
    ex.samples.grid_y = std::stoi(samples[1]);
  } catch (const std::exception&) {
    throw UsageError("--samples must look like NXxNY");
  }
  ex.superpixels = a.superpixels;
  std::optional<std::array<int, 3>> anchor;
  std::optional<Rgb> anchor_alpha;
  if (!a.anchor_voxel.empty() || !a.anchor_alpha.empty()) {
    if (a.anchor_voxel.empty() || a.anchor_alpha.empty())
      throw UsageError("--anchor-voxel and --anchor-alpha go together");
    const auto v = parse_list<int>(a.anchor_voxel, 3, "--anchor-voxel");
    const auto al = parse_list<double>(a.anchor_alpha, 3, "--anchor-alpha");
    anchor = std::array<int, 3>{v[0], v[1], v[2]};
    anchor_alpha = Rgb(al[0], al[1], al[2]);
  }

  const FrameManifest manifest = load_manifest(a.manifest);
  const FrustumSpec spec = frustum_for(manifest, opts.pyramid.back(),
                                       a.z_near > 0.0 ? std::optional<double>(a.z_near) : std::nullopt,
                                       a.z_far > 0.0 ? std::optional<double>(a.z_far) : std::nullopt);
  const CalibrationInputs inputs = collect_inputs(manifest, spec, opts.mode, ex);
  std::cout << "observations " << inputs.observations.size() << ", pairs " << inputs.pairs.size()
            << (inputs.pure_water.empty() ? ", no pure-water frames" : ", pure-water bound on") << "\n";
  auto [lut, report] = calibrate_hierarchical(inputs, spec, opts);
  if (anchor) lut = fix_scale(lut, *anchor, *anchor_alpha, opts.epsilon);

  std::printf("%-12s %-3s %14s %14s %5s %5s %5s\n", "level", "ch", "initial", "final", "iter", "acc", "rej");
  for (const LevelReport& l : report.levels)
    for (int c = 0; c < 3; ++c) {
      const ChannelReport& r = l.channels[c];
      const std::string dims =
          std::to_string(l.dims[0]) + "x" + std::to_string(l.dims[1]) + "x" + std::to_string(l.dims[2]);
      std::printf("%-12s %-3c %14.6e %14.6e %5d %5d %5d\n", dims.c_str(), "rgb"[c], r.initial_cost, r.final_cost,
                  r.iterations, r.accepted, r.rejected);
    }
  fs::create_directories(a.out);
  save_lut(fs::path(a.out) / "lut.vlut", lut);
  json rep = report.to_json();
  rep["mode"] = a.mode;
  if (anchor) rep["anchor"] = {{"voxel", {(*anchor)[0], (*anchor)[1], (*anchor)[2]}},
                               {"alpha", {(*anchor_alpha)[0], (*anchor_alpha)[1], (*anchor_alpha)[2]}}};
  write_text(fs::path(a.out) / "report.json", rep.dump(2) + "\n");
  std::cout << "wrote " << (fs::path(a.out) / "lut.vlut").string() << "\n";
  return 0;
}

struct RestoreArgs {
  std::string manifest, lut, out, role;
  bool clamp = false, no_shading = false;
};

int cmd_restore(const RestoreArgs& a) {
  BatchOptions opts;
  opts.clamp = a.clamp;
  opts.restore.shading = !a.no_shading;
  if (!a.role.empty()) {
    try {
      opts.role = role_from_string(a.role);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const FrameManifest manifest = load_manifest(a.manifest);
  const LookupTable lut = load_lut(a.lut);
  const json summary = restore_batch(manifest, lut, a.out, opts);
  std::cout << "restored " << summary["restored"].get<std::size_t>() << " frames, skipped "
            << summary["skipped"].size() << "\n";
  return 0;
}

struct EvalArgs {
  std::string manifest, restored, out, lut, role = "test";
};

int cmd_eval(const EvalArgs& a) {
  EvalOptions opts;
  if (a.role == "all") opts.role.reset();
  else {
    try {
      opts.role = role_from_string(a.role);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const FrameManifest manifest = load_manifest(a.manifest);
  std::optional<LookupTable> lut;
  if (!a.lut.empty()) lut = load_lut(a.lut);
  if (!fs::is_directory(a.restored)) throw Error(Errc::io_error, "no restored directory " + a.restored);
  const EvalResult res = evaluate(manifest, a.restored, opts, lut ? &*lut : nullptr);
  fs::create_directories(a.out);
  write_text(fs::path(a.out) / "eval.json", res.to_json().dump(2) + "\n");
  write_text(fs::path(a.out) / "patches.csv", res.patches_csv());
  write_text(fs::path(a.out) / "trend.csv", res.trend_csv());
  std::size_t below10 = 0, total = 0;
  for (const auto& p : res.patches)
    for (int c = 0; c < 3; ++c, ++total) below10 += p.error_pct[c] < 10.0;
  std::cout << res.patches.size() << " patches, " << below10 << "/" << total << " channel errors below 10%, "
            << res.trend.size() << " trend points\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  try {
    const json config = read_config(argc, argv);
    CLI::App app{"Volumetric lookup-table calibration and restoration"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file whose keys supply option defaults");

    SimulateArgs sa;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Render a named synthetic dataset");
    {
      Binder b(sim_cmd, config);
      b.add("recipe", sa.recipe, "Recipe name", true);
      b.add("out", sa.out, "Output directory", true);
      b.add("seed", sa.seed, "RNG seed", true);
      b.add("width", sa.width, "Image width (default 320)");
      b.add("height", sa.height, "Image height (default 240)");
      b.add("noise", sa.noise, "Gaussian noise sigma (default 0.005)");
      b.flag("no_quantize", sa.no_quantize, "Keep float images instead of 8-bit");
    }

    CalibrateArgs ca;
    CLI::App* cal_cmd = app.add_subcommand("calibrate", "Estimate a lookup table from a manifest");
    {
      Binder b(cal_cmd, config);
      b.add("manifest", ca.manifest, "Dataset manifest", true);
      b.add("out", ca.out, "Output directory for lut.vlut and report.json", true);
      b.add("mode", ca.mode, "known_color or correspondence_only");
      b.add("pyramid", ca.pyramid, "Comma-separated NXxNYxNZ levels, coarse to fine");
      b.add("samples", ca.samples, "Sample grid per annotated region, NXxNY");
      b.add("superpixels", ca.superpixels, "Superpixels per frame in correspondence mode");
      b.add("voxel_cap", ca.voxel_cap, "Maximum observations per voxel");
      b.add("max_iterations", ca.max_iterations, "LM iterations per level");
      b.add("anchor_voxel", ca.anchor_voxel, "i,j,k voxel whose alpha fixes the scale");
      b.add("anchor_alpha", ca.anchor_alpha, "r,g,b absolute alpha of the anchor voxel");
      b.add("reference_water", ca.reference_water, "Water of the weighting reference: clear, turbid, in_air");
      b.add("z_near", ca.z_near, "Override the near depth bound, meters");
      b.add("z_far", ca.z_far, "Override the far depth bound, meters");
      b.flag("no_pure_water", ca.no_pure_water, "Ignore pure-water frames");
      b.flag("in_air", ca.in_air, "Hold beta at zero");
    }

    RestoreArgs ra;
    CLI::App* res_cmd = app.add_subcommand("restore", "Restore frames with a calibrated table");
    {
      Binder b(res_cmd, config);
      b.add("manifest", ra.manifest, "Dataset manifest", true);
      b.add("lut", ra.lut, "Calibrated table", true);
      b.add("out", ra.out, "Output directory", true);
      b.add("role", ra.role, "Only frames with this role");
      b.flag("clamp", ra.clamp, "Write 16-bit PNG clamped to [0,1]");
      b.flag("no_shading", ra.no_shading, "Skip the incidence-cosine compensation");
    }

    EvalArgs ea;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Compare restored frames with annotated albedo");
    {
      Binder b(eval_cmd, config);
      b.add("manifest", ea.manifest, "Dataset manifest", true);
      b.add("restored", ea.restored, "Directory written by restore", true);
      b.add("out", ea.out, "Output directory for eval.json and CSV tables", true);
      b.add("lut", ea.lut, "Table used for restoration, adds coverage per patch");
      b.add("role", ea.role, "Frame role to evaluate, or 'all'");
    }

    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;
    }
    if (sim_cmd->parsed()) return cmd_simulate(sa);
    if (cal_cmd->parsed()) return cmd_calibrate(ca);
    if (res_cmd->parsed()) return cmd_restore(ra);
    if (eval_cmd->parsed()) return cmd_eval(ea);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vlut::cli

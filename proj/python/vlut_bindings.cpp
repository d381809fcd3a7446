#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>

#include "vlut/cli.hpp"
#include "vlut/error.hpp"
#include "vlut/pipeline.hpp"
#include "vlut/restore.hpp"
#include "vlut/simulate.hpp"
#include "vlut/weights.hpp"

namespace py = pybind11;
using namespace vlut;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

template <int C>
Image<C> to_image(const FloatArray& a, const char* what) {
  const bool ok = C == 1 ? (a.ndim() == 2 || (a.ndim() == 3 && a.shape(2) == 1)) : (a.ndim() == 3 && a.shape(2) == C);
  if (!ok) throw py::value_error(std::string(what) + (C == 1 ? " must be HxW" : " must be HxWx3"));
  Image<C> img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy_n(a.data(), img.data().size(), img.data().begin());
  return img;
}

template <int C>
FloatArray to_array(const Image<C>& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (C > 1) shape.push_back(C);
  FloatArray a(shape);
  std::copy(img.data().begin(), img.data().end(), a.mutable_data());
  return a;
}

// Tables are exposed as (nz, ny, nx) per channel, matching the flat layout.
DoubleArray field(const LookupTable& lut, bool beta) {
  const FrustumSpec& s = lut.spec();
  DoubleArray a({3, s.nz, s.ny, s.nx});
  for (int c = 0; c < 3; ++c) {
    const auto src = beta ? lut.beta(c) : lut.alpha(c);
    std::copy(src.begin(), src.end(), a.mutable_data() + c * lut.voxel_count());
  }
  return a;
}

void set_field(LookupTable& lut, const DoubleArray& a, bool beta) {
  const FrustumSpec& s = lut.spec();
  if (a.ndim() != 4 || a.shape(0) != 3 || a.shape(1) != s.nz || a.shape(2) != s.ny || a.shape(3) != s.nx)
    throw py::value_error("expected shape (3, nz, ny, nx)");
  for (int c = 0; c < 3; ++c) {
    auto dst = beta ? lut.beta(c) : lut.alpha(c);
    std::copy_n(a.data() + c * lut.voxel_count(), dst.size(), dst.begin());
  }
}

py::tuple rgb(const Rgb& v) { return py::make_tuple(v[0], v[1], v[2]); }

Rgb to_rgb(const std::array<double, 3>& v) { return Rgb(v[0], v[1], v[2]); }

}  // namespace

PYBIND11_MODULE(_vlut, m) {
  m.doc() = "Volumetric lookup-table calibration and restoration for underwater images";

  py::register_exception<Error>(m, "VlutError", PyExc_RuntimeError);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fx, double fy, double cx, double cy, int width, int height) {
             CameraIntrinsics c{fx, fy, cx, cy, width, height};
             c.validate();
             return c;
           }),
           py::arg("fx"), py::arg("fy"), py::arg("cx"), py::arg("cy"), py::arg("width"), py::arg("height"))
      .def_readwrite("fx", &CameraIntrinsics::fx)
      .def_readwrite("fy", &CameraIntrinsics::fy)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("width", &CameraIntrinsics::width)
      .def_readwrite("height", &CameraIntrinsics::height)
      .def("__repr__", [](const CameraIntrinsics& c) {
        return "CameraIntrinsics(fx=" + std::to_string(c.fx) + ", fy=" + std::to_string(c.fy) + ", " +
               std::to_string(c.width) + "x" + std::to_string(c.height) + ")";
      });

  py::class_<FrustumSpec>(m, "FrustumSpec")
      .def(py::init([](const CameraIntrinsics& intr, int nx, int ny, int nz, double z_near, double z_far) {
             FrustumSpec s;
             s.intr = intr;
             s.nx = nx;
             s.ny = ny;
             s.nz = nz;
             s.z_near = z_near;
             s.z_far = z_far;
             s.validate();
             return s;
           }),
           py::arg("camera"), py::arg("nx"), py::arg("ny"), py::arg("nz"), py::arg("z_near") = 0.5,
           py::arg("z_far") = 2.5)
      .def_readonly("nx", &FrustumSpec::nx)
      .def_readonly("ny", &FrustumSpec::ny)
      .def_readonly("nz", &FrustumSpec::nz)
      .def_readonly("z_near", &FrustumSpec::z_near)
      .def_readonly("z_far", &FrustumSpec::z_far)
      .def_readonly("camera", &FrustumSpec::intr)
      .def("voxel_center", [](const FrustumSpec& s, int x, int y, int z) {
        const Point3 p = s.voxel_center(x, y, z);
        return py::make_tuple(p.x(), p.y(), p.z());
      });

  py::class_<LookupTable>(m, "LookupTable")
      .def(py::init<const FrustumSpec&, double, double>(), py::arg("spec"), py::arg("alpha") = 1.0,
           py::arg("beta") = 0.0)
      .def_property_readonly("spec", &LookupTable::spec)
      .def_property("alpha", [](const LookupTable& l) { return field(l, false); },
                    [](LookupTable& l, const DoubleArray& a) { set_field(l, a, false); })
      .def_property("beta", [](const LookupTable& l) { return field(l, true); },
                    [](LookupTable& l, const DoubleArray& a) { set_field(l, a, true); })
      .def_property(
          "obs_count",
          [](const LookupTable& l) {
            const FrustumSpec& s = l.spec();
            DoubleArray a({s.nz, s.ny, s.nx});
            std::copy(l.obs_count().begin(), l.obs_count().end(), a.mutable_data());
            return a;
          },
          [](LookupTable& l, const DoubleArray& a) {
            if (static_cast<std::size_t>(a.size()) != l.voxel_count()) throw py::value_error("expected nz*ny*nx values");
            std::copy_n(a.data(), l.voxel_count(), l.obs_count().begin());
          })
      .def(
          "sample",
          [](const LookupTable& l, std::array<double, 3> p, bool clamp) {
            const SampledParams sp = l.sample(Point3(p[0], p[1], p[2]), clamp ? LocateMode::clamp : LocateMode::strict);
            return py::make_tuple(rgb(sp.alpha), rgb(sp.beta));
          },
          py::arg("point"), py::arg("clamp") = false, "Trilinear (alpha, beta) at a camera-frame point")
      .def("upsample", &LookupTable::upsample, py::arg("nx"), py::arg("ny"), py::arg("nz"))
      .def("validate", &LookupTable::validate)
      .def("serialize",
           [](const LookupTable& l) {
             const auto b = l.serialize();
             return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
           })
      .def_static("deserialize",
                  [](const py::bytes& data) {
                    const std::string s = data;
                    return LookupTable::deserialize(
                        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
                  })
      .def("__eq__", [](const LookupTable& a, const LookupTable& b) { return a == b; });

  m.def("save_lut", &save_lut, py::arg("path"), py::arg("lut"));
  m.def("load_lut", &load_lut, py::arg("path"));

  m.def(
      "backproject",
      [](double u, double v, double depth, const CameraIntrinsics& c) {
        const Point3 p = backproject({u, v}, depth, c);
        return py::make_tuple(p.x(), p.y(), p.z());
      },
      py::arg("u"), py::arg("v"), py::arg("depth"), py::arg("camera"));
  m.def(
      "project",
      [](std::array<double, 3> p, const CameraIntrinsics& c) {
        const PixelCoord px = project(Point3(p[0], p[1], p[2]), c);
        return py::make_tuple(px.u, px.v);
      },
      py::arg("point"), py::arg("camera"));

  m.def("observation_weight",
        py::overload_cast<double, double, double, double, double, double>(&observation_weight),
        py::arg("intensity"), py::arg("distance"), py::arg("voxel_distance"), py::arg("mean_n"), py::arg("snr0g"),
        py::arg("mean0g"));
  m.def("snr", &snr, py::arg("intensity"), py::arg("mean_n"), py::arg("snr0g"), py::arg("mean0g"));

  m.def(
      "restore_image",
      [](const FloatArray& image, const FloatArray& depth, const LookupTable& lut, bool shading) {
        RestoreOptions o;
        o.shading = shading;
        const ImageRGB img = to_image<3>(image, "image");
        const DepthMap d = to_image<1>(depth, "depth");
        RestoredFrame r;
        {
          py::gil_scoped_release nogil;
          r = restore_image(img, d, lut, o);
        }
        return py::make_tuple(to_array(r.albedo), to_array(r.confidence), to_array(r.valid));
      },
      py::arg("image"), py::arg("depth"), py::arg("lut"), py::arg("shading") = true,
      "Returns (albedo HxWx3, confidence HxWx3, valid HxW); invalid albedo pixels are NaN");

  m.def("recipe_names", &sim::recipe_names);
  m.def(
      "make_dataset",
      [](const std::string& recipe, const std::filesystem::path& out, std::uint64_t seed, std::optional<int> width,
         std::optional<int> height, std::optional<double> noise, std::optional<bool> quantize) {
        sim::RecipeOptions o{recipe, seed, width, height, noise, quantize};
        py::gil_scoped_release nogil;
        return sim::make_dataset(o, out).frames.size();
      },
      py::arg("recipe"), py::arg("out_dir"), py::arg("seed") = 0, py::arg("width") = py::none(),
      py::arg("height") = py::none(), py::arg("noise") = py::none(), py::arg("quantize") = py::none(),
      "Renders a named synthetic dataset and returns the frame count");
  m.def(
      "ground_truth_lut",
      [](const std::filesystem::path& manifest, int nx, int ny, int nz) {
        const FrameManifest fm = load_manifest(manifest);
        if (!fm.simulation.contains("medium")) throw Error(Errc::invalid_input, "manifest has no simulated medium");
        return sim::ground_truth_lut(frustum_for(fm, {nx, ny, nz}), sim::medium_from_json(fm.simulation["medium"]));
      },
      py::arg("manifest"), py::arg("nx"), py::arg("ny"), py::arg("nz"),
      "Table rendered from the medium recorded in a simulated manifest");

  m.def(
      "_calibrate",
      [](const std::filesystem::path& manifest, std::vector<std::array<int, 3>> pyramid, bool correspondence,
         bool in_air, bool pure_water, std::array<int, 2> samples, std::optional<std::array<int, 3>> anchor,
         std::optional<std::array<double, 3>> anchor_alpha) {
        SolveOptions o;
        o.pyramid = std::move(pyramid);
        if (o.pyramid.empty()) throw py::value_error("pyramid must not be empty");
        o.mode = correspondence ? CalibrationMode::correspondence_only : CalibrationMode::known_color;
        o.fix_beta = in_air;
        o.use_pure_water = pure_water;
        if (in_air) o.reference = sim::reference_medium(sim::WaterParams::in_air());
        ExtractOptions ex;
        ex.samples.grid_x = samples[0];
        ex.samples.grid_y = samples[1];
        py::gil_scoped_release nogil;
        const FrameManifest fm = load_manifest(manifest);
        const FrustumSpec spec = frustum_for(fm, o.pyramid.back());
        auto [lut, rep] = calibrate_hierarchical(collect_inputs(fm, spec, o.mode, ex), spec, o);
        if (anchor) {
          if (!anchor_alpha) throw py::value_error("anchor needs anchor_alpha");
          lut = fix_scale(lut, *anchor, to_rgb(*anchor_alpha), o.epsilon);
        }
        return std::make_pair(lut, rep.to_json().dump());
      },
      py::arg("manifest"), py::arg("pyramid"), py::arg("correspondence"), py::arg("in_air"), py::arg("pure_water"),
      py::arg("samples"), py::arg("anchor"), py::arg("anchor_alpha"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"vlut"};
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release nogil;
        return cli::run(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line front end in process and returns its exit code");
}

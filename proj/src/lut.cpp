#include "vlut/lut.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "vlut/error.hpp"

namespace vlut {
namespace {

constexpr char kMagic[4] = {'V', 'L', 'U', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 3 * 4 + 2 * 8 + 4 * 8 + 2 * 4;

static_assert(std::endian::native == std::endian::little, "serialization assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size())
      throw Error(Errc::truncated, "LUT stream ends at byte " + std::to_string(bytes_.size()));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Per-axis linear interpolation footprint.
struct AxisCell {
  int i0 = 0;
  int i1 = 0;
  double f = 0.0;
};

AxisCell axis_cell(double g, int n) {
  if (n <= 1) return {0, 0, 0.0};
  g = std::clamp(g, 0.0, static_cast<double>(n - 1));
  const int i0 = std::min(static_cast<int>(std::floor(g)), n - 2);
  return {i0, i0 + 1, g - i0};
}

std::string voxel_name(const FrustumSpec& spec, const char* array, int channel, std::size_t flat) {
  const auto [x, y, z] = spec.unflatten(flat);
  std::ostringstream os;
  os << array;
  if (channel >= 0) os << "[c=" << channel << "]";
  os << "[z=" << z << "][y=" << y << "][x=" << x << "]";
  return os.str();
}

}  // namespace

void FrustumSpec::validate() const {
  intr.validate();
  if (!(std::isfinite(z_near) && std::isfinite(z_far) && z_near > 0.0 && z_near < z_far))
    throw Error(Errc::invalid_input, "frustum requires 0 < z_near < z_far");
  if (nx < 1 || ny < 1 || nz < 1) throw Error(Errc::invalid_input, "frustum voxel counts must be >= 1");
}

std::array<int, 3> FrustumSpec::unflatten(std::size_t index) const {
  const int x = static_cast<int>(index % nx);
  const int y = static_cast<int>((index / nx) % ny);
  const int z = static_cast<int>(index / (static_cast<std::size_t>(nx) * ny));
  return {x, y, z};
}

double FrustumSpec::grid_x(double u) const {
  return nx > 1 ? (u + 0.5) / intr.width * (nx - 1) : 0.0;
}

double FrustumSpec::grid_y(double v) const {
  return ny > 1 ? (v + 0.5) / intr.height * (ny - 1) : 0.0;
}

double FrustumSpec::grid_z(double z) const {
  return nz > 1 ? (z - z_near) / (z_far - z_near) * (nz - 1) : 0.0;
}

PixelCoord FrustumSpec::node_pixel(int x, int y) const {
  const double u = nx > 1 ? static_cast<double>(x) / (nx - 1) * intr.width - 0.5 : intr.width / 2.0 - 0.5;
  const double v = ny > 1 ? static_cast<double>(y) / (ny - 1) * intr.height - 0.5 : intr.height / 2.0 - 0.5;
  return {u, v};
}

double FrustumSpec::slab_depth(int z) const {
  return nz > 1 ? z_near + static_cast<double>(z) / (nz - 1) * (z_far - z_near) : 0.5 * (z_near + z_far);
}

Point3 FrustumSpec::voxel_center(int x, int y, int z) const {
  return backproject(node_pixel(x, y), slab_depth(z), intr);
}

double FrustumSpec::voxel_diagonal(int /*x*/, int /*y*/, int z) const {
  const double depth = slab_depth(z);
  const double du = nx > 1 ? static_cast<double>(intr.width) / (nx - 1) : intr.width;
  const double dv = ny > 1 ? static_cast<double>(intr.height) / (ny - 1) : intr.height;
  const double dx = du * depth / intr.fx;
  const double dy = dv * depth / intr.fy;
  const double dz = nz > 1 ? (z_far - z_near) / (nz - 1) : (z_far - z_near);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

FrustumSpec FrustumSpec::with_resolution(int new_nx, int new_ny, int new_nz) const {
  FrustumSpec s = *this;
  s.nx = new_nx;
  s.ny = new_ny;
  s.nz = new_nz;
  return s;
}

GridLocation locate_grid(double gx, double gy, double gz, const FrustumSpec& spec) {
  GridLocation loc;
  loc.gx = gx;
  loc.gy = gy;
  loc.gz = gz;
  const AxisCell cx = axis_cell(gx, spec.nx);
  const AxisCell cy = axis_cell(gy, spec.ny);
  const AxisCell cz = axis_cell(gz, spec.nz);
  for (int k = 0; k < 8; ++k) {
    const bool bx = k & 1, by = k & 2, bz = k & 4;
    const int ix = bx ? cx.i1 : cx.i0;
    const int iy = by ? cy.i1 : cy.i0;
    const int iz = bz ? cz.i1 : cz.i0;
    loc.corner[k] = static_cast<std::uint32_t>(spec.flat_index(ix, iy, iz));
    loc.weight[k] = (bx ? cx.f : 1.0 - cx.f) * (by ? cy.f : 1.0 - cy.f) * (bz ? cz.f : 1.0 - cz.f);
  }
  return loc;
}

GridLocation locate(const Point3& p, const FrustumSpec& spec, LocateMode mode) {
  if (!p.allFinite()) throw Error(Errc::invalid_input, "non-finite point");
  if (mode == LocateMode::strict) {
    constexpr double tol = 1e-12;
    if (p.z() < spec.z_near - tol || p.z() > spec.z_far + tol)
      throw Error(Errc::out_of_frustum, "depth " + std::to_string(p.z()) + " outside [z_near, z_far]");
    const PixelCoord px = project(p, spec.intr);
    if (!inside_image(px, spec.intr))
      throw Error(Errc::out_of_frustum, "point projects outside the image");
    return locate_grid(spec.grid_x(px.u), spec.grid_y(px.v), spec.grid_z(p.z()), spec);
  }
  const PixelCoord px = project(p, spec.intr);
  const double z = std::clamp(p.z(), spec.z_near, spec.z_far);
  auto clamp_axis = [](double g, int n) { return std::clamp(g, 0.0, static_cast<double>(n - 1)); };
  return locate_grid(clamp_axis(spec.grid_x(px.u), spec.nx), clamp_axis(spec.grid_y(px.v), spec.ny),
                     clamp_axis(spec.grid_z(z), spec.nz), spec);
}

LookupTable::LookupTable(const FrustumSpec& spec, double alpha_fill, double beta_fill) : spec_(spec) {
  spec_.validate();
  for (int c = 0; c < 3; ++c) {
    alpha_[c].assign(spec_.voxel_count(), alpha_fill);
    beta_[c].assign(spec_.voxel_count(), beta_fill);
  }
  obs_count_.assign(spec_.voxel_count(), 0.0);
}

void LookupTable::validate() const {
  const std::size_t n = voxel_count();
  for (int c = 0; c < 3; ++c) {
    if (alpha_[c].size() != n || beta_[c].size() != n)
      throw Error(Errc::invalid_value, "LUT array size mismatch");
  }
  if (obs_count_.size() != n) throw Error(Errc::invalid_value, "LUT obs_count size mismatch");
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(alpha_[c][i])) throw Error(Errc::non_finite, voxel_name(spec_, "alpha", c, i));
      if (!(alpha_[c][i] > 0.0)) throw Error(Errc::invalid_value, voxel_name(spec_, "alpha", c, i) + " <= 0");
    }
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(beta_[c][i])) throw Error(Errc::non_finite, voxel_name(spec_, "beta", c, i));
      if (beta_[c][i] < 0.0) throw Error(Errc::invalid_value, voxel_name(spec_, "beta", c, i) + " < 0");
    }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(obs_count_[i])) throw Error(Errc::non_finite, voxel_name(spec_, "obs_count", -1, i));
    if (obs_count_[i] < 0.0) throw Error(Errc::invalid_value, voxel_name(spec_, "obs_count", -1, i) + " < 0");
  }
}

SampledParams LookupTable::sample_at(const GridLocation& loc) const {
  SampledParams out{Rgb::Zero(), Rgb::Zero()};
  for (int k = 0; k < 8; ++k) {
    const double w = loc.weight[k];
    const std::uint32_t idx = loc.corner[k];
    for (int c = 0; c < 3; ++c) {
      out.alpha[c] += w * alpha_[c][idx];
      out.beta[c] += w * beta_[c][idx];
    }
  }
  return out;
}

SampledParams LookupTable::sample(const Point3& p, LocateMode mode) const {
  return sample_at(locate(p, spec_, mode));
}

double LookupTable::sample_obs_count(const GridLocation& loc) const {
  double s = 0.0;
  for (int k = 0; k < 8; ++k) s += loc.weight[k] * obs_count_[loc.corner[k]];
  return s;
}

LookupTable LookupTable::upsample(int new_nx, int new_ny, int new_nz) const {
  if (new_nx < spec_.nx || new_ny < spec_.ny || new_nz < spec_.nz)
    throw Error(Errc::invalid_argument, "upsample cannot shrink the grid");
  LookupTable out(spec_.with_resolution(new_nx, new_ny, new_nz));
  const FrustumSpec& fine = out.spec_;
  // Nodes map through normalized frustum coordinates, which both grids share.
  auto coarse_coord = [](int i, int n_new, int n_old) {
    if (n_old <= 1) return 0.0;
    if (n_new <= 1) return 0.5 * (n_old - 1);
    return static_cast<double>(i) / (n_new - 1) * (n_old - 1);
  };
  for (int z = 0; z < fine.nz; ++z)
    for (int y = 0; y < fine.ny; ++y)
      for (int x = 0; x < fine.nx; ++x) {
        const GridLocation loc = locate_grid(coarse_coord(x, fine.nx, spec_.nx),
                                             coarse_coord(y, fine.ny, spec_.ny),
                                             coarse_coord(z, fine.nz, spec_.nz), spec_);
        const SampledParams s = sample_at(loc);
        const std::size_t idx = fine.flat_index(x, y, z);
        for (int c = 0; c < 3; ++c) {
          out.alpha_[c][idx] = s.alpha[c];
          out.beta_[c][idx] = s.beta[c];
        }
      }
  return out;
}

std::vector<std::uint8_t> LookupTable::serialize() const {
  validate();
  Writer w;
  for (char ch : kMagic) w.put(ch);
  w.put(kVersion);
  w.put(static_cast<std::uint32_t>(spec_.nx));
  w.put(static_cast<std::uint32_t>(spec_.ny));
  w.put(static_cast<std::uint32_t>(spec_.nz));
  w.put(spec_.z_near);
  w.put(spec_.z_far);
  w.put(spec_.intr.fx);
  w.put(spec_.intr.fy);
  w.put(spec_.intr.cx);
  w.put(spec_.intr.cy);
  w.put(static_cast<std::uint32_t>(spec_.intr.width));
  w.put(static_cast<std::uint32_t>(spec_.intr.height));
  for (int c = 0; c < 3; ++c)
    for (double v : alpha_[c]) w.put(static_cast<float>(v));
  for (int c = 0; c < 3; ++c)
    for (double v : beta_[c]) w.put(static_cast<float>(v));
  for (double v : obs_count_) w.put(static_cast<float>(v));
  return w.take();
}

LookupTable LookupTable::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(Errc::truncated, "LUT stream shorter than magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::bad_magic, "expected \"VLUT\"");
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw Error(Errc::version_mismatch, "LUT version " + std::to_string(version) + ", expected 1");
  FrustumSpec spec;
  spec.nx = static_cast<int>(r.get<std::uint32_t>());
  spec.ny = static_cast<int>(r.get<std::uint32_t>());
  spec.nz = static_cast<int>(r.get<std::uint32_t>());
  spec.z_near = r.get<double>();
  spec.z_far = r.get<double>();
  spec.intr.fx = r.get<double>();
  spec.intr.fy = r.get<double>();
  spec.intr.cx = r.get<double>();
  spec.intr.cy = r.get<double>();
  spec.intr.width = static_cast<int>(r.get<std::uint32_t>());
  spec.intr.height = static_cast<int>(r.get<std::uint32_t>());
  if (spec.nx < 1 || spec.ny < 1 || spec.nz < 1 || spec.nx > (1 << 16) || spec.ny > (1 << 16) ||
      spec.nz > (1 << 16))
    throw Error(Errc::invalid_value, "LUT dimensions out of range");
  const std::size_t n = spec.voxel_count();
  const std::size_t payload = (7 * n) * sizeof(float);
  if (r.remaining() < payload)
    throw Error(Errc::truncated, "LUT payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                                     std::to_string(payload));
  if (r.remaining() > payload) throw Error(Errc::invalid_value, "trailing bytes after LUT payload");
  spec.validate();

  LookupTable lut(spec);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) lut.alpha_[c][i] = r.get<float>();
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < n; ++i) lut.beta_[c][i] = r.get<float>();
  for (std::size_t i = 0; i < n; ++i) lut.obs_count_[i] = r.get<float>();
  lut.validate();
  return lut;
}

void save_lut(const std::filesystem::path& path, const LookupTable& lut) {
  const std::vector<std::uint8_t> bytes = lut.serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_error, "write failed: " + path.string());
}

LookupTable load_lut(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return LookupTable::deserialize(bytes);
}

}  // namespace vlut

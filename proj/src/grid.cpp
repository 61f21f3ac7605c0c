#include "ncboltz/grid.hpp"

#include "ncboltz/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace ncboltz
{
namespace
{
void check_finite(std::vector<double> const &v)
{
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
    {
      std::ostringstream os;
      os << "Field: non-finite entry at flat index " << i;
      throw numerical_failure(os.str());
    }
}

// Signed wave number on an n-point periodic lattice.
int signed_mode(int k, int n) { return k < n / 2 ? k : k - n; }

struct FftwBuffer
{
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {}
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(FftwBuffer const &) = delete;
  FftwBuffer &operator=(FftwBuffer const &) = delete;
  fftw_complex *ptr;
};

} // namespace

void GridSpec::validate() const
{
  std::ostringstream os;
  if (!(R > 0.0 && std::isfinite(R)))
    os << "grid.R must be positive";
  else if (n_v < 8 || n_v % 2 != 0)
    os << "grid.n_v must be even and >= 8 (got " << n_v << ")";
  else if (n_x < 1)
    os << "grid.n_x must be >= 1 (got " << n_x << ")";
  else if (!(support_radius > 0.0) || support_radius > R / std::numbers::sqrt2 * (1.0 + 1e-12))
    os << "grid.support_radius must lie in (0, R/sqrt(2)] (got " << support_radius << ")";
  else if (!(Lx > 0.0))
    os << "grid.Lx must be positive";
  else
    return;
  throw config_error(os.str());
}

Vec3 GridSpec::velocity(std::size_t flat_v) const
{
  int const k = int(flat_v % n_v);
  int const j = int((flat_v / n_v) % n_v);
  int const i = int(flat_v / (std::size_t(n_v) * n_v));
  return velocity(i, j, k);
}

std::vector<std::size_t> GridSpec::support_nodes() const
{
  std::vector<std::size_t> out;
  double const r2 = support_radius * support_radius;
  for (std::size_t q = 0; q < nodes_v(); ++q)
    if (norm2(velocity(q)) <= r2)
      out.push_back(q);
  return out;
}

Field::Field(GridSpec grid) : grid_(grid), values_(grid.size(), 0.0) { grid_.validate(); }

Field::Field(GridSpec grid, std::vector<double> values) : grid_(grid), values_(std::move(values))
{
  grid_.validate();
  if (values_.size() != grid_.size())
    throw usage_error("Field: value count does not match the grid");
  check_finite(values_);
}

Field Field::operator+(Field const &o) const
{
  require_same_grid(*this, o, "Field::operator+");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] += o.values_[i];
  return Field(grid_, std::move(v));
}

Field Field::operator-(Field const &o) const
{
  require_same_grid(*this, o, "Field::operator-");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] -= o.values_[i];
  return Field(grid_, std::move(v));
}

Field Field::scaled(double a) const
{
  std::vector<double> v(values_);
  for (auto &x : v)
    x *= a;
  return Field(grid_, std::move(v));
}

double Field::max_abs() const
{
  double m = 0.0;
  for (double x : values_)
    m = std::max(m, std::abs(x));
  return m;
}

void require_same_grid(Field const &a, Field const &b, char const *where)
{
  if (!(a.grid() == b.grid()))
    throw usage_error(std::string(where) + ": fields live on different grids");
}

Field make_maxwellian(GridSpec const &grid)
{
  grid.validate();
  std::size_t const nv = grid.nodes_v();
  std::vector<double> cell(nv);
  double const c = std::pow(2.0 * std::numbers::pi, -1.5);
  double mass = 0.0;
  for (std::size_t q = 0; q < nv; ++q)
  {
    cell[q] = c * std::exp(-0.5 * norm2(grid.velocity(q)));
    mass += cell[q];
  }
  mass *= grid.cell_volume();
  for (auto &x : cell)
    x /= mass;
  std::vector<double> all;
  all.reserve(grid.size());
  for (int ix = 0; ix < grid.n_x; ++ix)
    all.insert(all.end(), cell.begin(), cell.end());
  return Field(grid, std::move(all));
}

Field sobolev_multiplier(Field const &f, double m)
{
  GridSpec const &g = f.grid();
  int const n = g.n_v;
  int const nh = n / 2 + 1;
  std::size_t const nv = g.nodes_v();
  std::size_t const nc = std::size_t(n) * n * nh;
  std::vector<double> out(f.data());
  if (m == 0.0)
    return Field(g, std::move(out));

  std::vector<double> symbol(nc);
  double const dual = 2.0 * std::numbers::pi / (2.0 * g.R);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < nh; ++c)
      {
        double const xa = dual * signed_mode(a, n);
        double const xb = dual * signed_mode(b, n);
        double const xc = dual * c;
        symbol[(std::size_t(a) * n + b) * nh + c] =
            std::pow(1.0 + xa * xa + xb * xb + xc * xc, 0.5 * m) / double(nv);
      }

  std::vector<double> real(nv);
  FftwBuffer spec(nc);
  fftw_plan fwd = fftw_plan_dft_r2c_3d(n, n, n, real.data(), spec.ptr, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_dft_c2r_3d(n, n, n, spec.ptr, real.data(), FFTW_ESTIMATE);
  for (int ix = 0; ix < g.n_x; ++ix)
  {
    std::copy_n(out.begin() + std::ptrdiff_t(ix * nv), nv, real.begin());
    fftw_execute(fwd);
    for (std::size_t q = 0; q < nc; ++q)
    {
      spec.ptr[q][0] *= symbol[q];
      spec.ptr[q][1] *= symbol[q];
    }
    fftw_execute(bwd);
    std::copy_n(real.begin(), nv, out.begin() + std::ptrdiff_t(ix * nv));
  }
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  return Field(g, std::move(out));
}

Field spatial_multiplier(Field const &f, double m)
{
  GridSpec const &g = f.grid();
  std::vector<double> out(f.data());
  if (g.n_x == 1 || m == 0.0)
    return Field(g, std::move(out));

  int const nx = g.n_x;
  int const nh = nx / 2 + 1;
  int const nv = int(g.nodes_v());
  FftwBuffer spec(std::size_t(nh) * nv);
  // Transform along x for every velocity node: stride nv in real space.
  fftw_plan fwd = fftw_plan_many_dft_r2c(1, &nx, nv, out.data(), nullptr, nv, 1, spec.ptr,
                                         nullptr, nv, 1, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_many_dft_c2r(1, &nx, nv, spec.ptr, nullptr, nv, 1, out.data(),
                                         nullptr, nv, 1, FFTW_ESTIMATE);
  std::copy(f.data().begin(), f.data().end(), out.begin());
  fftw_execute(fwd);
  for (int k = 0; k < nh; ++k)
  {
    double const xi = 2.0 * std::numbers::pi * k / g.Lx;
    double const w = std::pow(1.0 + xi * xi, 0.5 * m) / nx;
    for (int q = 0; q < nv; ++q)
    {
      spec.ptr[std::size_t(k) * nv + q][0] *= w;
      spec.ptr[std::size_t(k) * nv + q][1] *= w;
    }
  }
  fftw_execute(bwd);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  return Field(g, std::move(out));
}

Field free_transport(Field const &f, double t)
{
  GridSpec const &g = f.grid();
  std::vector<double> out(f.data());
  if (g.n_x == 1 || t == 0.0)
    return Field(g, std::move(out));

  int const nx = g.n_x;
  int const nh = nx / 2 + 1;
  int const nv = int(g.nodes_v());
  FftwBuffer spec(std::size_t(nh) * nv);
  fftw_plan fwd = fftw_plan_many_dft_r2c(1, &nx, nv, out.data(), nullptr, nv, 1, spec.ptr,
                                         nullptr, nv, 1, FFTW_ESTIMATE);
  fftw_plan bwd = fftw_plan_many_dft_c2r(1, &nx, nv, spec.ptr, nullptr, nv, 1, out.data(),
                                         nullptr, nv, 1, FFTW_ESTIMATE);
  std::copy(f.data().begin(), f.data().end(), out.begin());
  fftw_execute(fwd);
  for (int k = 0; k < nh; ++k)
  {
    double const xi = 2.0 * std::numbers::pi * k / g.Lx;
    bool const nyquist = nx % 2 == 0 && k == nx / 2;
    for (int q = 0; q < nv; ++q)
    {
      double const phase = -g.node(q / (g.n_v * g.n_v)) * xi * t;
      double const c = std::cos(phase) / nx, s = nyquist ? 0.0 : std::sin(phase) / nx;
      auto &z = spec.ptr[std::size_t(k) * nv + q];
      double const re = z[0], im = z[1];
      z[0] = c * re - s * im;
      z[1] = s * re + c * im;
    }
  }
  fftw_execute(bwd);
  fftw_destroy_plan(fwd);
  fftw_destroy_plan(bwd);
  return Field(g, std::move(out));
}

double interpolate(Field const &f, int x_index, Vec3 const &v)
{
  GridSpec const &g = f.grid();
  if (x_index < 0 || x_index >= g.n_x)
    throw usage_error("interpolate: spatial index out of range");
  if (std::abs(v.x) > g.R || std::abs(v.y) > g.R || std::abs(v.z) > g.R)
    return 0.0;
  double const inv_h = 1.0 / g.h();
  int const n = g.n_v;
  int base[3];
  double frac[3];
  for (int d = 0; d < 3; ++d)
  {
    double const t = (v[d] + g.R) * inv_h - 0.5;
    double const fl = std::floor(t);
    base[d] = int(fl);
    frac[d] = t - fl;
  }
  auto node = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
      return 0.0;
    return f.at(x_index, i, j, k);
  };
  double acc = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
      {
        double const w = (a ? frac[0] : 1.0 - frac[0]) * (b ? frac[1] : 1.0 - frac[1]) *
                         (c ? frac[2] : 1.0 - frac[2]);
        if (w != 0.0)
          acc += w * node(base[0] + a, base[1] + b, base[2] + c);
      }
  return acc;
}

Moments moments(Field const &f)
{
  GridSpec const &g = f.grid();
  double const dmu = g.cell_volume() * g.dx();
  Moments m;
  std::size_t const nv = g.nodes_v();
  for (std::size_t q = 0; q < nv; ++q)
  {
    Vec3 const v = g.velocity(q);
    double acc = 0.0;
    for (int ix = 0; ix < g.n_x; ++ix)
      acc += f[std::size_t(ix) * nv + q];
    acc *= dmu;
    m.mass += acc;
    m.momentum += acc * v;
    m.energy += acc * norm2(v);
  }
  return m;
}

std::uint64_t fnv1a(std::string const &text)
{
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text)
  {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

namespace
{
std::filesystem::path with_suffix(std::filesystem::path const &base, char const *suffix)
{
  return std::filesystem::path(base.string() + suffix);
}

void to_little_endian(std::vector<double> &v)
{
  if constexpr (std::endian::native == std::endian::big)
  {
    for (auto &x : v)
    {
      std::uint64_t u;
      std::memcpy(&u, &x, sizeof u);
      u = __builtin_bswap64(u);
      std::memcpy(&x, &u, sizeof u);
    }
  }
}

} // namespace

void write_checkpoint(std::filesystem::path const &base, Field const &f, double t,
                      std::uint64_t config_hash)
{
  std::vector<double> payload(f.data());
  to_little_endian(payload);
  {
    std::ofstream bin(with_suffix(base, ".bin"), std::ios::binary);
    if (!bin)
      throw usage_error("write_checkpoint: cannot open " + with_suffix(base, ".bin").string());
    bin.write(reinterpret_cast<char const *>(payload.data()),
              std::streamsize(payload.size() * sizeof(double)));
  }
  GridSpec const &g = f.grid();
  std::ofstream meta(with_suffix(base, ".meta"));
  meta << std::setprecision(17);
  meta << "format ncboltz-checkpoint 1\n";
  meta << "grid.R " << g.R << "\n";
  meta << "grid.n_v " << g.n_v << "\n";
  meta << "grid.n_x " << g.n_x << "\n";
  meta << "grid.support_radius " << g.support_radius << "\n";
  meta << "grid.Lx " << g.Lx << "\n";
  meta << "t " << t << "\n";
  meta << "config_hash " << std::hex << std::setw(16) << std::setfill('0') << config_hash << "\n";
}

Field read_checkpoint(std::filesystem::path const &base, CheckpointMeta *meta_out)
{
  std::ifstream meta(with_suffix(base, ".meta"));
  if (!meta)
    throw usage_error("read_checkpoint: missing " + with_suffix(base, ".meta").string());
  CheckpointMeta m;
  std::string line;
  while (std::getline(meta, line))
  {
    std::istringstream is(line);
    std::string key;
    is >> key;
    if (key == "grid.R")
      is >> m.grid.R;
    else if (key == "grid.n_v")
      is >> m.grid.n_v;
    else if (key == "grid.n_x")
      is >> m.grid.n_x;
    else if (key == "grid.support_radius")
      is >> m.grid.support_radius;
    else if (key == "grid.Lx")
      is >> m.grid.Lx;
    else if (key == "t")
      is >> m.t;
    else if (key == "config_hash")
      is >> std::hex >> m.config_hash;
  }
  m.grid.validate();
  std::ifstream bin(with_suffix(base, ".bin"), std::ios::binary);
  if (!bin)
    throw usage_error("read_checkpoint: missing " + with_suffix(base, ".bin").string());
  std::vector<double> payload(m.grid.size());
  bin.read(reinterpret_cast<char *>(payload.data()), std::streamsize(payload.size() * sizeof(double)));
  if (bin.gcount() != std::streamsize(payload.size() * sizeof(double)))
    throw usage_error("read_checkpoint: truncated payload in " + with_suffix(base, ".bin").string());
  to_little_endian(payload);
  if (meta_out)
    *meta_out = m;
  return Field(m.grid, std::move(payload));
}

} // namespace ncboltz

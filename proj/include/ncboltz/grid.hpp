#pragma once

#include "ncboltz/vec3.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ncboltz
{
// Truncated uniform velocity box [-R, R]^3 crossed with an optional periodic
// spatial interval [0, Lx). Velocity nodes sit at -R + (j + 1/2) h, so no node
// is at v = 0 and odd moments of even data vanish.
struct GridSpec
{
  double R = 8.0;
  int n_v = 16;
  int n_x = 1;
  double support_radius = 8.0 / 1.4142135623730951;
  double Lx = 1.0;

  void validate() const;

  double h() const { return 2.0 * R / n_v; }
  double dx() const { return Lx / n_x; }
  double cell_volume() const { double const hh = h(); return hh * hh * hh; }
  std::size_t nodes_v() const { return std::size_t(n_v) * n_v * n_v; }
  std::size_t size() const { return std::size_t(n_x) * nodes_v(); }

  double node(int j) const { return -R + (j + 0.5) * h(); }
  Vec3 velocity(int i, int j, int k) const { return {node(i), node(j), node(k)}; }
  Vec3 velocity(std::size_t flat_v) const;
  double x_node(int ix) const { return (ix + 0.5) * dx(); }

  std::size_t index(int ix, int i, int j, int k) const
  {
    return ((std::size_t(ix) * n_v + i) * n_v + j) * n_v + k;
  }

  // Flat velocity indices with |v| <= support_radius, in increasing order.
  std::vector<std::size_t> support_nodes() const;

  bool operator==(GridSpec const &) const = default;
};

// A real distribution on the grid, indexed (x, v1, v2, v3) row-major.
// Entries are checked finite on construction.
class Field
{
public:
  explicit Field(GridSpec grid);
  Field(GridSpec grid, std::vector<double> values);

  GridSpec const &grid() const { return grid_; }
  std::span<double const> values() const { return values_; }
  std::vector<double> const &data() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double at(int ix, int i, int j, int k) const { return values_[grid_.index(ix, i, j, k)]; }

  // Velocity slice of spatial cell ix.
  std::span<double const> cell(int ix) const
  {
    return std::span<double const>(values_).subspan(std::size_t(ix) * grid_.nodes_v(),
                                                    grid_.nodes_v());
  }

  Field operator+(Field const &o) const;
  Field operator-(Field const &o) const;
  Field scaled(double a) const;

  double max_abs() const;

private:
  GridSpec grid_;
  std::vector<double> values_;
};

void require_same_grid(Field const &a, Field const &b, char const *where);

// Discrete Maxwellian (2 pi)^{-3/2} exp(-|v|^2/2) rescaled to unit discrete
// mass per spatial cell, replicated over x.
Field make_maxwellian(GridSpec const &grid);

// <D>^m f, symbol (1 + |xi|^2)^{m/2} on the dual lattice of the periodic box.
Field sobolev_multiplier(Field const &f, double m);

// (1 - Delta_x)^{m/2} f along the spatial torus; identity when n_x == 1.
Field spatial_multiplier(Field const &f, double m);

// Exact free transport f(x - v_1 t, v) by a phase shift of the spatial
// Fourier coefficients; the Nyquist mode keeps only its real part.
Field free_transport(Field const &f, double t);

// Trilinear interpolation in cell ix with zero extension outside [-R, R]^3.
double interpolate(Field const &f, int x_index, Vec3 const &v);

// Discrete integrals summed over x and v with measure dx h^3.
struct Moments
{
  double mass = 0.0;
  Vec3 momentum;
  double energy = 0.0;
};
Moments moments(Field const &f);

// Row-major little-endian float64 payload plus a text sidecar (.meta) with the
// grid parameters, the time stamp and a configuration hash.
struct CheckpointMeta
{
  GridSpec grid;
  double t = 0.0;
  std::uint64_t config_hash = 0;
};

void write_checkpoint(std::filesystem::path const &base, Field const &f, double t,
                      std::uint64_t config_hash);
Field read_checkpoint(std::filesystem::path const &base, CheckpointMeta *meta = nullptr);

// 64-bit FNV-1a, used for configuration hashes.
std::uint64_t fnv1a(std::string const &text);

} // namespace ncboltz

#include "ncboltz/functionals.hpp"

#include "ncboltz/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ncboltz
{
namespace
{
// <v>^e at every node of one cell.
std::vector<double> bracket_power(GridSpec const &g, double e)
{
  std::vector<double> w(g.nodes_v());
  for (std::size_t q = 0; q < w.size(); ++q)
    w[q] = std::pow(1.0 + norm2(g.velocity(q)), 0.5 * e);
  return w;
}

Field weighted(Field const &f, double e)
{
  GridSpec const &g = f.grid();
  auto const w = bracket_power(g, e);
  std::size_t const nv = g.nodes_v();
  std::vector<double> out(f.data());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= w[i % nv];
  return Field(g, std::move(out));
}

double l2_squared(Field const &f)
{
  double acc = 0.0;
  for (double x : f.values())
    acc += x * x;
  return acc * f.grid().cell_volume() * f.grid().dx();
}

} // namespace

void NormSpec::validate() const
{
  if (!(p >= 1.0))
    throw config_error("NormSpec: p must be >= 1");
}

double norm(Field const &f, NormSpec const &spec)
{
  spec.validate();
  GridSpec const &g = f.grid();
  double const dmu = g.cell_volume() * g.dx();
  switch (spec.kind)
  {
  case NormKind::Lpq:
  {
    auto const w = bracket_power(g, spec.p * spec.q);
    std::size_t const nv = g.nodes_v();
    double acc = 0.0;
    for (std::size_t i = 0; i < f.values().size(); ++i)
      acc += std::pow(std::abs(f[i]), spec.p) * w[i % nv];
    return std::pow(acc * dmu, 1.0 / spec.p);
  }
  case NormKind::Hml:
    return std::sqrt(l2_squared(weighted(sobolev_multiplier(f, spec.m), spec.l)));
  case NormKind::LlogL:
  {
    double acc = 0.0;
    for (double x : f.values())
      acc += std::abs(x) * std::log1p(std::abs(x));
    return acc * dmu;
  }
  }
  throw usage_error("norm: unknown kind");
}

double weighted_sup(Field const &f, double k)
{
  GridSpec const &g = f.grid();
  auto const w = bracket_power(g, k);
  std::size_t const nv = g.nodes_v();
  double m = 0.0;
  for (std::size_t i = 0; i < f.values().size(); ++i)
    m = std::max(m, std::abs(f[i]) * w[i % nv]);
  return m;
}

Field project_P(Field const &f)
{
  GridSpec const &g = f.grid();
  Field const mu = make_maxwellian(g);
  std::size_t const nv = g.nodes_v();
  double const dmu = g.cell_volume() * g.dx();
  double const inv_sqrt6 = 1.0 / std::sqrt(6.0);
  double c_mass = 0.0, c_energy = 0.0;
  Vec3 c_mom;
  for (std::size_t i = 0; i < f.values().size(); ++i)
  {
    Vec3 const v = g.velocity(i % nv);
    c_mass += f[i];
    c_mom += f[i] * v;
    c_energy += f[i] * (norm2(v) - 3.0) * inv_sqrt6;
  }
  c_mass *= dmu;
  c_mom *= dmu;
  c_energy *= dmu;
  std::vector<double> out(f.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    Vec3 const v = g.velocity(i % nv);
    out[i] = (c_mass + dot(c_mom, v) + c_energy * (norm2(v) - 3.0) * inv_sqrt6) * mu[i];
  }
  return Field(g, std::move(out));
}

void LevelSetSpec::validate() const
{
  if (!(K >= 0.0) || !(l >= 0.0))
    throw config_error("LevelSetSpec: K and l must be nonnegative");
}

Field level_set(Field const &f, LevelSetSpec const &spec)
{
  spec.validate();
  GridSpec const &g = f.grid();
  auto const w = bracket_power(g, spec.l);
  std::size_t const nv = g.nodes_v();
  std::vector<double> out(f.values().size());
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    double const d = f[i] * w[i % nv] - spec.K;
    out[i] = spec.sign == LevelSign::plus ? (d >= 0.0 ? d : 0.0) : (d < 0.0 ? d : 0.0);
  }
  return Field(g, std::move(out));
}

void EnergySpec::validate() const
{
  std::ostringstream os;
  if (!(p > 1.0 && p < 2.0))
    os << "EnergySpec: p must lie in (1, 2) (got " << p << ")";
  else if (!(s_dd > 0.0 && s_dd < s / (2.0 * (s + 3.0))))
    os << "EnergySpec: s'' must lie in (0, s/(2(s+3))) = (0, " << s / (2.0 * (s + 3.0)) << ") (got "
       << s_dd << ")";
  else if (!(C0 > 0.0))
    os << "EnergySpec: C0 must be positive";
  else
    return;
  throw config_error(os.str());
}

double trapezoid(std::span<double const> t, std::span<double const> y)
{
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return acc;
}

EnergyTerms energy_terms(std::span<Snapshot const> snapshots, double K, double T1, double T2,
                         EnergySpec const &spec)
{
  spec.validate();
  if (!(T2 >= T1))
    throw usage_error("energy_functional: requires T1 <= T2");
  double const span_tol = 1e-9 * std::max({1.0, std::abs(T1), std::abs(T2)});
  std::vector<Snapshot const *> window;
  for (auto const &s : snapshots)
    if (s.t >= T1 - span_tol && s.t <= T2 + span_tol)
      window.push_back(&s);
  if (window.size() < 2)
    throw usage_error("energy_functional: fewer than 2 snapshots in [T1, T2]");
  double const dt0 = window[1]->t - window[0]->t;
  for (std::size_t i = 1; i < window.size(); ++i)
  {
    double const dt = window[i]->t - window[i - 1]->t;
    if (!(dt > 0.0) || std::abs(dt - dt0) > 1e-6 * dt0)
      throw usage_error("energy_functional: snapshots must be uniformly spaced in time");
  }

  LevelSetSpec const ls{K, spec.l, LevelSign::plus};
  std::vector<double> times, diss, frac;
  EnergyTerms out;
  for (auto const *snap : window)
  {
    Field const lev = level_set(snap->f, ls);
    out.sup_l2 = std::max(out.sup_l2, l2_squared(lev));
    times.push_back(snap->t);
    diss.push_back(l2_squared(sobolev_multiplier(weighted(lev, 0.5 * spec.gamma), spec.s)));

    Field const inner = weighted(lev, -2.0 + 0.5 * spec.gamma);
    std::vector<double> sq(inner.data());
    for (auto &x : sq)
      x *= x;
    Field const smoothed = spatial_multiplier(Field(inner.grid(), std::move(sq)), spec.s_dd);
    double acc = 0.0;
    for (double x : smoothed.values())
      acc += std::pow(std::abs(x), spec.p);
    frac.push_back(acc * inner.grid().cell_volume() * inner.grid().dx());
  }
  out.dissipation = trapezoid(times, diss);
  out.fractional = std::pow(trapezoid(times, frac), 1.0 / spec.p) / spec.C0;
  return out;
}

double energy_functional(std::span<Snapshot const> snapshots, double K, double T1, double T2,
                         EnergySpec const &spec)
{
  return energy_terms(snapshots, K, T1, T2, spec).total();
}

} // namespace ncboltz

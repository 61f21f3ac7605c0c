#include "support.hpp"

#include "ncboltz/errors.hpp"
#include "ncboltz/functionals.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace ncboltz;
using test_support::max_abs_diff;
using test_support::random_field;
using test_support::small_grid;

namespace
{
Field from_function(GridSpec const &g, auto fn)
{
  std::vector<double> v(g.size());
  for (int ix = 0; ix < g.n_x; ++ix)
    for (std::size_t q = 0; q < g.nodes_v(); ++q)
      v[std::size_t(ix) * g.nodes_v() + q] = fn(g.x_node(ix), g.velocity(q));
  return Field(g, std::move(v));
}

double bracket(Vec3 const &v) { return std::sqrt(1.0 + norm2(v)); }

Trajectory decaying_trajectory(GridSpec const &g, std::mt19937_64 &rng, int count, double dt)
{
  Field const base = random_field(g, rng, 0.3);
  Trajectory out;
  for (int i = 0; i < count; ++i)
  {
    double const t = i * dt;
    out.push_back({t, base.scaled(std::exp(-t))});
  }
  return out;
}
} // namespace

TEST_CASE("norm examples")
{
  GridSpec const g = small_grid(8);
  Field const one(g, std::vector<double>(g.size(), 1.0));
  CHECK(norm(one, NormSpec::lpq(2.0, 0.0)) ==
        doctest::Approx(std::pow(2.0 * g.R, 1.5)).epsilon(1e-14));
  CHECK(norm(Field(g), NormSpec::llogl()) == 0.0);
  CHECK(norm(one, NormSpec::llogl()) ==
        doctest::Approx(std::log(2.0) * std::pow(2.0 * g.R, 3.0)).epsilon(1e-14));

  std::mt19937_64 rng(4);
  Field const f = random_field(small_grid(8, 2), rng);
  for (double l : {0.0, 1.5, 3.0})
    CHECK(norm(f, NormSpec::hml(0.0, l)) ==
          doctest::Approx(norm(f, NormSpec::lpq(2.0, l))).epsilon(1e-12));

  NormSpec bad = NormSpec::lpq(0.5, 0.0);
  CHECK_THROWS_AS(bad.validate(), config_error);
  CHECK_THROWS_AS(norm(f, bad), config_error);
}

TEST_CASE("norms are homogeneous and subadditive")
{
  GridSpec const g = small_grid(8);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  NormSpec const specs[] = {NormSpec::lpq(1.0, 0.0), NormSpec::lpq(2.0, 1.0),
                            NormSpec::lpq(1.5, 2.0), NormSpec::hml(0.5, 1.0),
                            NormSpec::hml(-0.5, 0.0)};
  double worst_h = 0.0, worst_t = -1.0;
  for (int i = 0; i < 1000; ++i)
  {
    Field const f = random_field(g, rng), h = random_field(g, rng);
    double const c = scale(rng);
    NormSpec const &sp = specs[i % 5];
    double const nf = norm(f, sp), nh = norm(h, sp);
    worst_h = std::max(worst_h, std::abs(norm(f.scaled(c), sp) - std::abs(c) * nf) / nf);
    worst_t = std::max(worst_t, (norm(f + h, sp) - nf - nh) / (nf + nh));
  }
  CHECK(worst_h <= 1e-10);
  CHECK(worst_t <= 1e-10);
}

TEST_CASE("weighted sup")
{
  GridSpec const g = small_grid(8);
  Field const mu = make_maxwellian(g);
  double expect = 0.0;
  for (std::size_t q = 0; q < g.nodes_v(); ++q)
    expect = std::max(expect, mu[q] * std::pow(bracket(g.velocity(q)), 4.0));
  CHECK(weighted_sup(mu, 4.0) == doctest::Approx(expect).epsilon(1e-15));
  CHECK(weighted_sup(mu, 0.0) == doctest::Approx(mu.max_abs()).epsilon(1e-15));
}

TEST_CASE("projection onto the invariant span")
{
  GridSpec const g = small_grid(32);
  Field const mu = make_maxwellian(g);
  CHECK(max_abs_diff(project_P(mu), mu) <= 1e-3 * mu.max_abs());

  Field const v1mu = from_function(g, [](double, Vec3 const &v) {
    return v.x * std::exp(-0.5 * norm2(v)) / std::pow(2.0 * std::numbers::pi, 1.5);
  });
  CHECK(max_abs_diff(project_P(v1mu), v1mu) <= 1e-3 * v1mu.max_abs());

  GridSpec const gs = small_grid(8, 3);
  std::mt19937_64 rng(6);
  Field const a = random_field(gs, rng), b = random_field(gs, rng);
  Field const lhs = project_P(a.scaled(2.0) + b.scaled(-0.5));
  Field const rhs = project_P(a).scaled(2.0) + project_P(b).scaled(-0.5);
  CHECK(max_abs_diff(lhs, rhs) <= 1e-12 * lhs.max_abs());

  // Pf is independent of x
  Field const pa = project_P(a);
  for (std::size_t q = 0; q < gs.nodes_v(); ++q)
    CHECK(pa[q] == pa[2 * gs.nodes_v() + q]);

  // complement: f - Pf projects to (almost) zero, better on finer grids
  auto defect = [](int n_v) {
    GridSpec const gg = small_grid(n_v);
    Field const f = from_function(gg, [](double, Vec3 const &v) {
      return (1.0 + 0.3 * v.y + 0.1 * v.z * v.z) * std::exp(-0.5 * norm2(v - Vec3{0.4, 0.0, 0.0}));
    });
    Field const c = f - project_P(f);
    return project_P(c).max_abs() / f.max_abs();
  };
  double const d8 = defect(8), d16 = defect(16);
  CHECK(d16 < d8);
  CHECK(d16 <= 1e-2);
}

TEST_CASE("level sets")
{
  GridSpec const g = small_grid(8);
  std::vector<double> v(g.size());
  for (std::size_t q = 0; q < g.nodes_v(); ++q)
    v[q] = 5.0 / std::pow(bracket(g.velocity(q)), 2.0);
  Field const f(g, v);
  Field const plus = level_set(f, {3.0, 2.0, LevelSign::plus});
  Field const minus = level_set(f, {3.0, 2.0, LevelSign::minus});
  for (std::size_t q = 0; q < g.nodes_v(); ++q)
  {
    CHECK(plus[q] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(minus[q] == 0.0);
  }
  Field const low = level_set(f, {7.0, 2.0, LevelSign::minus});
  CHECK(low[0] == doctest::Approx(-2.0).epsilon(1e-14));

  Field const mu = make_maxwellian(g);
  CHECK(level_set(mu, {weighted_sup(mu, 3.0), 3.0, LevelSign::plus}).max_abs() == 0.0);
  Field const zeroth = level_set(mu, {0.0, 3.0, LevelSign::plus});
  for (std::size_t q = 0; q < g.nodes_v(); ++q)
    CHECK(zeroth[q] == doctest::Approx(mu[q] * std::pow(bracket(g.velocity(q)), 3.0)));

  LevelSetSpec bad{-1.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), config_error);
}

TEST_CASE("energy spec invariants")
{
  EnergySpec e;
  CHECK_NOTHROW(e.validate());
  e.p = 2.0;
  CHECK_THROWS_AS(e.validate(), config_error);
  e = {};
  e.s_dd = e.s / (2.0 * (e.s + 3.0));
  CHECK_THROWS_AS(e.validate(), config_error);
  e = {};
  e.C0 = 0.0;
  CHECK_THROWS_AS(e.validate(), config_error);
}

TEST_CASE("trapezoid rule")
{
  std::vector<double> t{0.0, 0.5, 1.0, 2.0}, y{1.0, 2.0, 3.0, 5.0};
  CHECK(trapezoid(t, y) == doctest::Approx(0.5 * 1.5 + 0.5 * 2.5 + 4.0));
}

TEST_CASE("energy functional examples and errors")
{
  GridSpec const g = small_grid(8, 2);
  std::mt19937_64 rng(8);
  Trajectory const tr = decaying_trajectory(g, rng, 6, 0.2);
  EnergySpec spec;
  spec.l = 1.0;
  double sup = 0.0;
  for (auto const &s : tr)
    sup = std::max(sup, weighted_sup(s.f, spec.l));
  CHECK(energy_functional(tr, sup, 0.0, 1.0, spec) == 0.0);
  CHECK(energy_functional(tr, 1.01 * sup, 0.0, 1.0, spec) == 0.0);

  Trajectory zero;
  for (int i = 0; i < 3; ++i)
    zero.push_back({0.1 * i, Field(g)});
  CHECK(energy_functional(zero, 0.0, 0.0, 0.2, spec) == 0.0);

  CHECK_THROWS_AS(energy_functional(std::span(tr).first(1), 0.0, 0.0, 1.0, spec), usage_error);
  CHECK_THROWS_AS(energy_functional(tr, 0.0, 0.5, 0.55, spec), usage_error);
  CHECK_THROWS_AS(energy_functional(tr, 0.0, 1.0, 0.5, spec), usage_error);
  Trajectory uneven = tr;
  uneven[2].t = 0.45;
  CHECK_THROWS_AS(energy_functional(uneven, 0.0, 0.0, 1.0, spec), usage_error);

  EnergyTerms const terms = energy_terms(tr, 0.0, 0.0, 1.0, spec);
  CHECK(terms.sup_l2 > 0.0);
  CHECK(terms.dissipation > 0.0);
  CHECK(terms.fractional > 0.0);
  CHECK(terms.total() == doctest::Approx(terms.sup_l2 + terms.dissipation + terms.fractional));
}

TEST_CASE("energy functional monotonicity on random trajectories")
{
  std::mt19937_64 rng(31);
  for (int n_x : {1, 4})
  {
    GridSpec const g = small_grid(8, n_x);
    for (int trial = 0; trial < 5; ++trial)
    {
      Trajectory tr;
      for (int i = 0; i < 8; ++i)
        tr.push_back({0.25 * i, random_field(g, rng, 0.5)});
      EnergySpec spec;
      spec.l = 2.0;
      spec.gamma = -1.0;
      double prev = std::numeric_limits<double>::infinity();
      // the x-multiplier of a squared field is not order preserving, so
      // monotonicity in K is a property of the n_x = 1 functional
      for (double K : {0.0, 0.1, 0.3, 0.6, 1.0, 2.0})
      {
        if (n_x > 1)
          break;
        double const e = energy_functional(tr, K, 0.0, 1.75, spec);
        CHECK(e <= prev);
        prev = e;
      }
      double last = 0.0;
      for (double T2 : {0.25, 0.5, 1.0, 1.5, 1.75})
      {
        double const e = energy_functional(tr, 0.2, 0.0, T2, spec);
        CHECK(e >= last);
        last = e;
      }
    }
  }
}

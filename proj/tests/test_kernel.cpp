#include "ncboltz/errors.hpp"
#include "ncboltz/kernel.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace ncboltz;

namespace
{
Vec3 unit(Vec3 v) { return (1.0 / norm(v)) * v; }

Vec3 random_unit(std::mt19937_64 &rng)
{
  std::normal_distribution<double> nd;
  return unit({nd(rng), nd(rng), nd(rng)});
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
} // namespace

TEST_CASE("kernel spec invariants")
{
  KernelSpec k;
  CHECK_NOTHROW(k.validate());
  k.gamma = -3.0;
  CHECK_THROWS_AS(k.validate(), config_error);
  k = {};
  k.gamma = -2.0;
  k.s = 0.4;
  CHECK_THROWS_AS(k.validate(), config_error); // gamma + 2s = -1.2
  k = {};
  k.theta_min = 0.0;
  CHECK_THROWS_AS(k.validate(), config_error);
  k = {};
  k.s = 0.9;
  k.s_star = 0.3;
  k.eta = 0.1;
  CHECK_THROWS_AS(k.validate(), config_error); // 2s - 2s_* = 1.2
  k.s_star = 0.5;
  CHECK_NOTHROW(k.validate());
}

TEST_CASE("baseline angular profile saturates the singularity bound")
{
  KernelSpec k;
  k.kappa = 1.7;
  for (double th : {0.1, 0.5, 1.0})
    CHECK(std::sin(th) * angular_b(th, k) * std::pow(th, 1.0 + 2.0 * k.s) ==
          doctest::Approx(k.kappa).epsilon(1e-14));
  CHECK_THROWS_AS(angular_b(0.0, k), domain_error);
  CHECK_THROWS_AS(angular_b(1.6, k), domain_error);
}

TEST_CASE("regularized profile reduces when the exponent vanishes")
{
  KernelSpec k;
  k.s = 0.25;
  k.s_star = 0.25;
  k.eta = 1.0;
  KernelSpec base = k;
  base.eta = 0.0;
  CHECK(angular_b(0.5, k) == doctest::Approx(angular_b(0.5, base)).epsilon(1e-15));
}

TEST_CASE("b_eta bounds on a theta grid")
{
  for (double eta : {0.01, 0.1, 0.5, 1.0})
  {
    KernelSpec k;
    k.s = 0.75;
    k.s_star = 0.5;
    k.eta = eta;
    KernelSpec base = k;
    base.eta = 0.0;
    double const a0 = k.kappa / std::pow(std::numbers::pi + 1.0, 2.0 * k.s - 2.0 * k.s_star);
    CHECK(k.alpha0() == doctest::Approx(a0).epsilon(1e-15));
    for (int j = 1; j <= 1000; ++j)
    {
      double const th = k.theta_min * std::pow(half_pi / k.theta_min, j / 1000.0);
      double const be = angular_b(th, k);
      CHECK(be > 0.0);
      CHECK(be <= angular_b(th, base) * (1.0 + 1e-14));
      CHECK(be * std::pow(th, 2.0 + 2.0 * k.s_star) >= a0 * (1.0 - 1e-14));
    }
  }
}

TEST_CASE("kernel_B support and speed dependence")
{
  KernelSpec k;
  Vec3 const v{1, 0, 0}, vs{0, 0, 0};
  CHECK(kernel_B(v, vs, unit({-0.5, std::sqrt(0.75), 0.0}), k) == 0.0);
  // below theta_min
  CHECK(kernel_B(v, vs, unit({1.0, 1e-5, 0.0}), k) == 0.0);
  Vec3 const s45 = unit({1.0, 1.0, 0.0});
  CHECK(kernel_B(3.0 * v, vs, s45, k) == doctest::Approx(angular_b(std::numbers::pi / 4, k)));
  k.gamma = -1.0;
  CHECK(kernel_B(v, vs, s45, k) == doctest::Approx(angular_b(std::numbers::pi / 4, k)));
  CHECK(kernel_B(2.0 * v, vs, s45, k) ==
        doctest::Approx(0.5 * angular_b(std::numbers::pi / 4, k)));
  CHECK_THROWS_AS(kernel_B(v, v, s45, k), domain_error);
}

TEST_CASE("kernel_B exchange symmetry on the support")
{
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  KernelSpec k;
  k.gamma = -1.0;
  int compared = 0;
  for (int i = 0; i < 2000; ++i)
  {
    Vec3 const v{nd(rng), nd(rng), nd(rng)}, vs{nd(rng), nd(rng), nd(rng)};
    Vec3 const sg = random_unit(rng);
    double const a = kernel_B(v, vs, sg, k), b = kernel_B(vs, v, -sg, k);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(a, 1.0));
    compared += a > 0.0;
  }
  CHECK(compared > 500);
}

TEST_CASE("post_collision examples and elastic invariants")
{
  CollisionPair c = post_collision({1, 0, 0}, {-1, 0, 0}, {1, 0, 0});
  CHECK(norm(c.v_prime - Vec3{1, 0, 0}) < 1e-15);
  CHECK(norm(c.v_star_prime - Vec3{-1, 0, 0}) < 1e-15);
  c = post_collision({1, 0, 0}, {-1, 0, 0}, {0, 1, 0});
  CHECK(norm(c.v_prime - Vec3{0, 1, 0}) < 1e-15);
  CHECK(norm(c.v_star_prime - Vec3{0, -1, 0}) < 1e-15);
  CHECK(norm2(c.v_prime) + norm2(c.v_star_prime) == doctest::Approx(2.0));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd(0.0, 3.0);
  double worst_p = 0.0, worst_e = 0.0;
  for (int i = 0; i < 10000; ++i)
  {
    Vec3 const v{nd(rng), nd(rng), nd(rng)}, vs{nd(rng), nd(rng), nd(rng)};
    c = post_collision(v, vs, random_unit(rng));
    worst_p = std::max(worst_p, norm(c.v_prime + c.v_star_prime - v - vs) / norm(v + vs));
    worst_e = std::max(worst_e, rel(norm2(c.v_prime) + norm2(c.v_star_prime), norm2(v) + norm2(vs)));
  }
  CHECK(worst_p <= 1e-12);
  CHECK(worst_e <= 1e-12);
}

TEST_CASE("cancellation_S")
{
  KernelSpec k;
  CHECK(cancellation_S(1.0, k) == doctest::Approx(cancellation_S(2.0, k)).epsilon(1e-10));

  // Independent oracle: 61-point Gauss-Kronrod in theta on a geometric split.
  for (double gamma : {0.0, -1.0})
  {
    KernelSpec ke;
    ke.gamma = gamma;
    ke.s = 0.75;
    ke.eta = 0.1;
    for (double z : {0.5, 1.0, 3.0})
    {
      auto integrand = [&](double th) {
        double const ch = std::cos(0.5 * th);
        double const b = angular_b(th, ke);
        return 2.0 * std::numbers::pi * std::sin(th) * b *
               (std::pow(ch, -3.0) * std::pow(z / ch, gamma) - std::pow(z, gamma));
      };
      double oracle = 0.0;
      double lo = ke.theta_min;
      while (lo < half_pi)
      {
        double const hi = std::min(2.0 * lo, half_pi);
        oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 0);
        lo = hi;
      }
      double const S = cancellation_S(z, ke);
      CHECK(rel(S, oracle) <= 1e-6);
      CHECK(S > 0.0);
    }
  }
}

TEST_CASE("gamma0 and angular mass")
{
  KernelSpec k;
  auto mass = [&](double th) { return 2.0 * std::numbers::pi * angular_b(th, k) * std::sin(th); };
  auto g0 = [&](double th) { return 0.5 * mass(th) * std::pow(std::sin(0.5 * th), 2); };
  double om = 0.0, og = 0.0;
  for (double lo = k.theta_min; lo < half_pi;)
  {
    double const hi = std::min(2.0 * lo, half_pi);
    om += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(mass, lo, hi, 0);
    og += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g0, lo, hi, 0);
    lo = hi;
  }
  CHECK(rel(angular_mass(k), om) <= 1e-8);
  CHECK(rel(gamma0(k), og) <= 1e-8);
}

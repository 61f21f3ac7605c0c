#include "support.hpp"

#include "ncboltz/degiorgi.hpp"
#include "ncboltz/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace ncboltz;
using test_support::small_grid;

namespace
{
struct Pinned
{
  double p, r_star, xi_star;
  double p_prime;
  double beta[4];
  double a[4];
  double log2_Q0;
};

// Exact fractions worked out by hand from the closed formulas.
Pinned const pinned[] = {
    {1.1, 3.0, 4.0, 11.0 / 9.0, {19.0 / 11.0, 30.0 / 11.0, 3.0, 3.0}, {7.0 / 11.0, 18.0 / 11.0, 3.0, 2.0}, 9.0 / 4.0},
    {1.5, 4.0, 8.0, 3.0, {7.0 / 6.0, 8.0 / 3.0, 4.0, 4.0}, {1.0 / 3.0, 10.0 / 3.0, 7.0, 6.0}, 8.0},
    {1.2, 2.0, 5.0, 1.5, {7.0 / 6.0, 5.0 / 3.0, 2.0, 2.0}, {2.0 / 3.0, 13.0 / 6.0, 4.0, 3.0}, 10.0},
    {1.8, 10.0, 20.0, 9.0, {19.0 / 18.0, 50.0 / 9.0, 10.0, 10.0}, {1.0 / 9.0, 82.0 / 9.0, 19.0, 18.0}, 20.0},
    {1.25, 3.5, 6.0, 5.0 / 3.0, {31.0 / 20.0, 14.0 / 5.0, 3.5, 3.5}, {4.0 / 5.0, 14.0 / 5.0, 5.0, 4.0}, 36.0 / 11.0},
};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

Trajectory maxwellian_trajectory(GridSpec const &g, double amplitude, int count)
{
  Field const mu = make_maxwellian(g);
  Trajectory tr;
  for (int i = 0; i < count; ++i)
    tr.push_back({0.5 * i, mu.scaled(amplitude * std::exp(-0.3 * i))});
  return tr;
}
} // namespace

TEST_CASE("derived constants for pinned parameter sets")
{
  for (auto const &pc : pinned)
  {
    LadderParams const lp = derive_constants(pc.p, pc.r_star, pc.xi_star);
    CHECK(close(lp.p_prime, pc.p_prime, 1e-12));
    for (int i = 0; i < 4; ++i)
    {
      CHECK(close(lp.beta[i], pc.beta[i], 1e-12));
      CHECK(close(lp.a[i], pc.a[i], 1e-12));
    }
    CHECK(close(lp.Q0, std::exp2(pc.log2_Q0), 1e-12));
  }
  CHECK(derive_constants(1.1, 3.0, 4.0).Q0 == doctest::Approx(4.7568284600108841).epsilon(1e-12));
}

TEST_CASE("parameter rejection")
{
  // xi* = 2p' puts a_1 on the boundary
  try
  {
    derive_constants(1.1, 3.0, 22.0 / 9.0 * (1.0 - 1e-15));
    FAIL("expected rejection");
  }
  catch (config_error const &e)
  {
    CHECK(std::string(e.what()).find("a_1") != std::string::npos);
  }
  // r* below p' makes beta_1 <= 1
  try
  {
    derive_constants(1.8, 5.0, 20.0);
    FAIL("expected rejection");
  }
  catch (config_error const &e)
  {
    CHECK(std::string(e.what()).find("beta_1") != std::string::npos);
  }
  CHECK_THROWS_AS(derive_constants(2.0, 3.0, 4.0), config_error);
  CHECK_THROWS_AS(derive_constants(1.1, 1.0, 4.0), config_error);
  CHECK_THROWS_AS(derive_constants(1.1, 3.0, 4.0, 0.0), config_error);
  CHECK_THROWS_AS(LadderParams::injected({2.0}, {1.0, 1.0}, 1.0), config_error);
  CHECK_THROWS_AS(LadderParams::injected({1.0}, {1.0}, 1.0), config_error);
}

TEST_CASE("injected degenerate sets")
{
  LadderParams const four = LadderParams::injected({2, 2, 2, 2}, {1, 1, 1, 1}, 1.0);
  CHECK(four.Q0 == doctest::Approx(4.0).epsilon(1e-15));

  LadderParams const one = LadderParams::injected({2.0}, {1.0}, 1.0);
  CHECK(one.Q0 == doctest::Approx(4.0).epsilon(1e-15));
  for (double E0 : {0.0, 1e-3, 1.0, 7.5})
    CHECK(threshold_K0(E0, one) == doctest::Approx(64.0 * E0).epsilon(1e-14));

  ComparisonCertificate const cert = certify_comparison(2.0, 128.0, one, 30);
  CHECK(cert.passed);
  REQUIRE(cert.steps.size() == 30);
  for (auto const &s : cert.steps)
  {
    CHECK(s.passed);
    CHECK(s.lhs == doctest::Approx(0.25 * s.rhs).epsilon(1e-12));
    CHECK(s.rhs == doctest::Approx(2.0 * std::pow(4.0, -s.k)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(threshold_K0(-1.0, one), usage_error);
}

TEST_CASE("threshold is monotone in E0")
{
  LadderParams const lp = derive_constants(1.1, 3.0, 4.0);
  CHECK(threshold_K0(0.0, lp) == 0.0);
  double prev = 0.0;
  for (double E0 = 1e-6; E0 < 1e6; E0 *= 2.0)
  {
    double const k = threshold_K0(E0, lp);
    CHECK(k >= prev);
    prev = k;
  }
}

TEST_CASE("certificate at the threshold over random parameter sets")
{
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int passed = 0;
  for (int trial = 0; trial < 100; ++trial)
  {
    double const p = 1.05 + 0.9 * u(rng);
    double const pp = p / (2.0 - p);
    double const r = pp * (1.0 + 0.05 + 3.0 * u(rng));
    double const xi = 2.0 * pp * (1.0 + 0.05 + 3.0 * u(rng));
    double const C = std::exp(std::log(0.1) + std::log(100.0) * u(rng));
    double const E0 = std::exp(std::log(1e-3) + std::log(1e6) * u(rng));
    LadderParams const lp = derive_constants(p, r, xi, C);
    double const K0 = threshold_K0(E0, lp);
    ComparisonCertificate const cert = certify_comparison(E0, K0, lp, 30);
    passed += cert.passed;
    CHECK(cert.steps.size() == 30);
    ComparisonCertificate const above = certify_comparison(E0, 3.0 * K0, lp, 30);
    CHECK(above.passed);
  }
  CHECK(passed == 100);
}

TEST_CASE("certificate below the threshold")
{
  LadderParams const lp = derive_constants(1.1, 3.0, 4.0);
  double const E0 = 1.0, K0 = threshold_K0(E0, lp);
  CHECK_THROWS_AS(certify_comparison(E0, 0.5 * K0, lp, 30), usage_error);
  // at the threshold each term is at most E*_k / 4, the sum at most E*_k
  double worst = 0.0;
  for (auto const &st : certify_comparison(E0, K0, lp, 30).steps)
    worst = std::max(worst, st.lhs / st.rhs);
  CHECK(worst <= 1.0);
  CHECK(worst == doctest::Approx(0.25092417356849940).epsilon(1e-10));

  // the recursion itself still closes at half the threshold (ratio 0.3916)
  // and breaks at a tenth of it (ratio 1.1283)
  ComparisonCertificate const half = evaluate_comparison(E0, 0.5 * K0, lp, 30);
  CHECK(half.passed);
  ComparisonCertificate const tenth = evaluate_comparison(E0, 0.1 * K0, lp, 30);
  CHECK_FALSE(tenth.passed);
  double worst_tenth = 0.0;
  for (auto const &st : tenth.steps)
    worst_tenth = std::max(worst_tenth, st.lhs / st.rhs);
  CHECK(worst_tenth == doctest::Approx(1.128339607977004).epsilon(1e-10));

  ComparisonCertificate const zero = certify_comparison(0.0, 0.0, lp, 30);
  CHECK(zero.passed);
  for (auto const &s : zero.steps)
  {
    CHECK(s.lhs == 0.0);
    CHECK(s.rhs == 0.0);
  }
}

TEST_CASE("empirical ladder")
{
  GridSpec const g = small_grid(8, 2);
  EnergySpec espec;
  espec.l = 2.0;
  Trajectory const tr = maxwellian_trajectory(g, 0.05, 5);

  LevelEnergySeries const s = empirical_ladder(tr, 1.0, espec, 12);
  REQUIRE(s.M.size() == 13);
  REQUIRE(s.E.size() == 13);
  CHECK(s.M[0] == 0.0);
  for (std::size_t k = 1; k < s.M.size(); ++k)
  {
    CHECK(s.M[k] > s.M[k - 1]);
    CHECK(s.M[k] < 1.0);
    CHECK(s.E[k] <= s.E[k - 1]);
  }
  CHECK(s.E[0] > 0.0);

  double const sup = weighted_sup(tr.front().f, espec.l);
  CHECK(s.measured_sup == doctest::Approx(sup).epsilon(1e-15));
  CHECK(s.smallest_zero_K == doctest::Approx(sup).epsilon(1e-12));

  // K0 = 2 sup: M_1 = sup already empties the level sets
  LevelEnergySeries const big = empirical_ladder(tr, 2.0 * sup, espec, 6);
  CHECK(big.first_zero == 1);
  for (std::size_t k = 1; k < big.E.size(); ++k)
    CHECK(big.E[k] == 0.0);

  // sup bound: once K0 exceeds the measured sup the K0 level set is empty
  for (auto const &snap : tr)
    CHECK(level_set(snap.f, {1.01 * sup, espec.l, LevelSign::plus}).max_abs() == 0.0);

  Trajectory zero;
  for (int i = 0; i < 3; ++i)
    zero.push_back({0.5 * i, Field(g)});
  LevelEnergySeries const z = empirical_ladder(zero, 1.0, espec, 5);
  CHECK(z.first_zero == 0);
  for (double e : z.E)
    CHECK(e == 0.0);
  CHECK(z.smallest_zero_K == 0.0);

  CHECK_THROWS_AS(empirical_ladder(Trajectory{}, 1.0, espec, 5), usage_error);
  CHECK_THROWS_AS(empirical_ladder(tr, 0.0, espec, 5), usage_error);
}

TEST_CASE("fitted recursion constant recovers a synthetic ladder")
{
  LadderParams const lp = derive_constants(1.1, 3.0, 4.0);
  double const C = 0.37, K0 = 50.0;
  LevelEnergySeries s;
  s.K0 = K0;
  s.E.push_back(2.0);
  for (int k = 1; k <= 6; ++k)
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < lp.beta.size(); ++i)
      sum += std::exp2(k * (lp.a[i] + 1.0)) * std::pow(s.E.back(), lp.beta[i]) /
             std::pow(K0, lp.a[i]);
    s.E.push_back(C * sum);
  }
  FittedConstant const fc = fit_recursion_constant(s, lp);
  CHECK(fc.samples == 6);
  CHECK(fc.max_ratio == doctest::Approx(C).epsilon(1e-10));
  CHECK(fc.least_squares == doctest::Approx(C).epsilon(1e-10));

  s.E.push_back(0.0);
  CHECK(fit_recursion_constant(s, lp).samples == 6);
  LevelEnergySeries empty;
  empty.K0 = 1.0;
  empty.E = {0.0, 0.0};
  FittedConstant const none = fit_recursion_constant(empty, lp);
  CHECK(none.samples == 0);
  CHECK(none.max_ratio == 0.0);
}

TEST_CASE("threshold branches and json reports")
{
  LadderParams const lp = derive_constants(1.1, 3.0, 4.0);
  ThresholdBranches const tb = threshold_branches(0.5, 3.0, lp);
  CHECK(tb.energy_branch == threshold_K0(0.5, lp));
  CHECK(tb.initial_sup_branch == 6.0);
  CHECK(tb.combined == std::max(tb.energy_branch, 6.0));

  auto const jp = to_json(lp);
  CHECK(jp["beta"].size() == 4);
  CHECK(jp["Q0"].get<double>() == lp.Q0);
  auto const jc = to_json(certify_comparison(1.0, threshold_K0(1.0, lp), lp, 10));
  CHECK(jc["passed"].get<bool>());
  CHECK(jc["steps"].size() == 10);
  CHECK(jc.contains("threshold_K0"));
}

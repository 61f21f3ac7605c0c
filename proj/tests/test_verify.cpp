#include "support.hpp"

#include "ncboltz/errors.hpp"
#include "ncboltz/verify.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ncboltz;
using test_support::random_field;
using test_support::small_grid;

namespace
{
VerifyOptions fast_options()
{
  VerifyOptions o;
  o.grid = small_grid(16);
  return o;
}

Trajectory trajectory_from(GridSpec const &g, auto fn, int count, double dt)
{
  Trajectory tr;
  for (int i = 0; i < count; ++i)
  {
    double const t = i * dt;
    std::vector<double> v(g.size());
    for (int ix = 0; ix < g.n_x; ++ix)
      for (std::size_t q = 0; q < g.nodes_v(); ++q)
        v[std::size_t(ix) * g.nodes_v() + q] = fn(t, g.x_node(ix), g.velocity(q));
    tr.push_back({t, Field(g, std::move(v))});
  }
  return tr;
}
} // namespace

TEST_CASE("exponential decay fit")
{
  std::vector<double> t, y;
  for (int i = 0; i <= 80; ++i)
  {
    t.push_back(0.1 * i);
    y.push_back(3.0 * std::exp(-2.0 * t.back()));
  }
  DecayFit const fit = fit_decay(t, y, DecayModel::exponential, 1.0, 8.0);
  CHECK(fit.rate == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(std::abs(fit.rate - 2.0) <= 1e-6);
  CHECK(fit.r2 > 1.0 - 1e-9);
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(fit.samples == 71);
}

TEST_CASE("algebraic decay fit")
{
  std::vector<double> t, y;
  for (int i = 0; i <= 80; ++i)
  {
    t.push_back(0.1 * i);
    y.push_back(std::pow(1.0 + t.back(), -3.0));
  }
  DecayFit const fit = fit_decay(t, y, DecayModel::algebraic, 1.0, 8.0);
  CHECK(std::abs(fit.rate - 3.0) <= 1e-6);
  CHECK(fit.r2 > 1.0 - 1e-9);
}

TEST_CASE("decay fit errors")
{
  std::vector<double> t, y;
  for (int i = 0; i < 20; ++i)
  {
    t.push_back(i);
    y.push_back(std::exp(-double(i)));
  }
  y[5] = 0.0;
  CHECK_THROWS_AS(fit_decay(t, y, DecayModel::exponential, 0.0, 19.0), usage_error);
  y[5] = std::exp(-5.0);
  CHECK_THROWS_AS(fit_decay(t, y, DecayModel::exponential, 0.0, 8.0), usage_error);
  CHECK_NOTHROW(fit_decay(t, y, DecayModel::exponential, 0.0, 9.0));
  std::vector<double> shorter(y.begin(), y.end() - 1);
  CHECK_THROWS_AS(fit_decay(t, shorter, DecayModel::exponential, 0.0, 19.0), usage_error);
}

TEST_CASE("hypoellipticity diagnostic")
{
  GridSpec const one = small_grid(8, 1);
  std::mt19937_64 rng(1);
  Trajectory const flat{{0.0, random_field(one, rng)}, {0.1, random_field(one, rng)}};
  CHECK_THROWS_AS(hypoellipticity_diagnostic(flat, 0.01, 0.25, 0.0), usage_error);

  GridSpec const g = small_grid(8, 8);
  Trajectory const uniform = trajectory_from(
      g, [](double t, double, Vec3 const &v) { return std::exp(-t - 0.5 * norm2(v)); }, 11, 0.1);
  HypoellipticityReport const u = hypoellipticity_diagnostic(uniform, 0.02, 0.25, 2.0);
  std::vector<double> times, sq, un;
  for (auto const &s : uniform)
  {
    double const n = norm(s.f, NormSpec::lpq(2.0, 0.0));
    times.push_back(s.t);
    sq.push_back(n * n);
    un.push_back(n);
  }
  CHECK(u.integral == doctest::Approx(trapezoid(times, sq)).epsilon(1e-13));
  CHECK(u.integral_unsquared == doctest::Approx(trapezoid(times, un)).epsilon(1e-13));
  double const w = norm(uniform.front().f, NormSpec::lpq(2.0, 2.0));
  CHECK(u.initial_weighted == doctest::Approx(w * w).epsilon(1e-14));

  Trajectory const wavy = trajectory_from(
      g, [](double t, double x, Vec3 const &v) {
        return std::exp(-t) * std::sin(2.0 * std::numbers::pi * x) * std::exp(-0.5 * norm2(v));
      },
      11, 0.1);
  HypoellipticityReport const p = hypoellipticity_diagnostic(wavy, 0.0, 0.25, 0.0);
  std::vector<double> sq2;
  for (auto const &s : wavy)
    sq2.push_back(std::pow(norm(s.f, NormSpec::lpq(2.0, 0.0)), 2));
  CHECK(p.integral == doctest::Approx(trapezoid(times, sq2)).epsilon(1e-12));
  HypoellipticityReport const q = hypoellipticity_diagnostic(wavy, 0.02, 0.25, 0.0);
  CHECK(q.integral > p.integral);

  // fitted C makes the bound hold on every snapshot, and is the least such C
  for (std::size_t i = 0; i < q.times.size(); ++i)
  {
    double const t = q.times[i];
    CHECK(q.cumulative[i] <= q.fitted_C * std::exp(q.fitted_C * t) * (q.initial_weighted + t) *
                                 (1.0 + 1e-12));
  }
  double const smaller = 0.99 * q.fitted_C;
  bool some_violated = false;
  for (std::size_t i = 0; i < q.times.size(); ++i)
    some_violated = some_violated ||
                    q.cumulative[i] > smaller * std::exp(smaller * q.times[i]) *
                                          (q.initial_weighted + q.times[i]);
  CHECK(some_violated);

  CHECK_THROWS_AS(hypoellipticity_diagnostic(wavy, 0.05, 0.25, 0.0), usage_error);
  CHECK_THROWS_AS(hypoellipticity_diagnostic(Trajectory{}, 0.01, 0.25, 0.0), usage_error);
}

TEST_CASE("case list and unknown cases")
{
  auto const &ids = verify_case_ids();
  CHECK(ids.size() == 10);
  CHECK(ids.front() == "CHANGE_VARS_REGULAR");
  CHECK_THROWS_AS(verify_identity("NOT_A_CASE", KernelSpec{}, fast_options()), usage_error);
}

TEST_CASE("fast verification cases pass")
{
  KernelSpec const k;
  for (char const *id : {"REMARK35", "CUTOFF_LIPSCHITZ", "BETA_BOUNDS", "LALPHA_DISSIPATIVE",
                         "VPRIME_EXPANSION"})
  {
    CAPTURE(id);
    VerificationReport const r = verify_identity(id, k, fast_options());
    CHECK(r.case_id == id);
    CHECK(r.passed);
    CHECK_FALSE(r.checks.empty());
    bool all = true;
    for (auto const &c : r.checks)
      all = all && c.passed();
    CHECK(all == r.passed);
    CHECK(r.measured_error == r.checks.front().value);
    CHECK(r.tolerance == r.checks.front().limit);
  }
}

TEST_CASE("angular bound worked value at a right angle")
{
  double const s = std::sin(std::numbers::pi / 4.0);
  CHECK(0.25 * s * s - std::pow(s, 8) == doctest::Approx(1.0 / 16.0).epsilon(1e-15));
  VerificationReport const r = verify_identity("REMARK35", KernelSpec{}, fast_options());
  CHECK(r.details.contains("printed_bound_violations"));
}

TEST_CASE("reports are deterministic")
{
  KernelSpec const k;
  VerifyOptions o = fast_options();
  o.resolution = 6;
  for (char const *id : {"CUTOFF_LIPSCHITZ", "CHANGE_VARS_REGULAR"})
  {
    CAPTURE(id);
    std::string const a = to_json(verify_identity(id, k, o)).dump();
    std::string const b = to_json(verify_identity(id, k, o)).dump();
    CHECK(a == b);
  }
  VerifyOptions other = o;
  other.seed = 2;
  CHECK(to_json(verify_identity("CHANGE_VARS_REGULAR", k, o)).dump() !=
        to_json(verify_identity("CHANGE_VARS_REGULAR", k, other)).dump());
}

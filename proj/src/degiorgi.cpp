#include "ncboltz/degiorgi.hpp"

#include "ncboltz/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ncboltz
{
namespace
{
double ladder_Q0(std::vector<double> const &beta, std::vector<double> const &a)
{
  double q = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i)
    q = std::max(q, std::exp2((a[i] + 1.0) / (beta[i] - 1.0)));
  return q;
}

void check_exponents(std::vector<double> const &beta, std::vector<double> const &a)
{
  if (beta.empty() || beta.size() != a.size())
    throw config_error("ladder: beta and a must be nonempty and of equal length");
  for (std::size_t i = 0; i < beta.size(); ++i)
  {
    std::ostringstream os;
    if (!(beta[i] > 1.0))
      os << "ladder: beta_" << i + 1 << " = " << beta[i] << " must exceed 1";
    else if (!(a[i] > 0.0))
      os << "ladder: a_" << i + 1 << " = " << a[i] << " must be positive";
    else
      continue;
    throw config_error(os.str());
  }
}

double log_sum_exp(std::vector<double> const &x)
{
  double const m = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(m))
    return m;
  double acc = 0.0;
  for (double v : x)
    acc += std::exp(v - m);
  return m + std::log(acc);
}

// log of sum_i 2^{k(a_i+1)} E_prev^{beta_i} / K0^{a_i}, without C.
double log_recursion_sum(int k, double log_E_prev, double log_K0, LadderParams const &params)
{
  std::vector<double> terms(params.beta.size());
  for (std::size_t i = 0; i < terms.size(); ++i)
    terms[i] = k * (params.a[i] + 1.0) * std::numbers::ln2 + params.beta[i] * log_E_prev -
               params.a[i] * log_K0;
  return log_sum_exp(terms);
}

double positive_weighted_sup(std::span<Snapshot const> snapshots, double l)
{
  double m = 0.0;
  for (auto const &s : snapshots)
  {
    GridSpec const &g = s.f.grid();
    std::size_t const nv = g.nodes_v();
    std::vector<double> w(nv);
    for (std::size_t q = 0; q < nv; ++q)
      w[q] = std::pow(1.0 + norm2(g.velocity(q)), 0.5 * l);
    for (std::size_t i = 0; i < s.f.values().size(); ++i)
      m = std::max(m, s.f[i] * w[i % nv]);
  }
  return m;
}

} // namespace

LadderParams LadderParams::injected(std::vector<double> beta, std::vector<double> a, double C)
{
  check_exponents(beta, a);
  if (!(C > 0.0))
    throw config_error("ladder: C must be positive");
  LadderParams lp;
  lp.C = C;
  lp.Q0 = ladder_Q0(beta, a);
  lp.beta = std::move(beta);
  lp.a = std::move(a);
  return lp;
}

LadderParams derive_constants(double p, double r_star, double xi_star, double C)
{
  std::ostringstream os;
  if (!(p > 1.0 && p < 2.0))
    os << "ladder: p = " << p << " must lie in (1, 2)";
  else if (!(r_star > p))
    os << "ladder: r_star = " << r_star << " must exceed p = " << p;
  else if (!(C > 0.0))
    os << "ladder: C must be positive";
  if (!os.str().empty())
    throw config_error(os.str());

  LadderParams lp;
  lp.p = p;
  lp.r_star = r_star;
  lp.xi_star = xi_star;
  lp.C = C;
  double const pp = p / (2.0 - p);
  lp.p_prime = pp;
  lp.beta = {0.5 * (1.0 + r_star / pp), r_star / p, r_star, r_star};
  lp.a = {(xi_star - 2.0 * pp) / (2.0 * pp), (xi_star - 2.0 * p) / p, xi_star - 1.0,
          xi_star - 2.0};
  check_exponents(lp.beta, lp.a);
  lp.Q0 = ladder_Q0(lp.beta, lp.a);
  return lp;
}

double threshold_K0(double E0, LadderParams const &params)
{
  if (!(E0 >= 0.0))
    throw usage_error("threshold_K0: E0 must be nonnegative");
  if (E0 == 0.0)
    return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < params.beta.size(); ++i)
  {
    double const b = params.beta[i], a = params.a[i];
    double const lg = (std::log(4.0) + std::log(params.C) + (b - 1.0) * std::log(E0) +
                       b * std::log(params.Q0)) /
                      a;
    best = std::max(best, lg);
  }
  return std::exp(best);
}

ComparisonCertificate evaluate_comparison(double E0, double K0, LadderParams const &params,
                                          int k_max)
{
  if (!(E0 >= 0.0) || !(K0 >= 0.0) || k_max < 1)
    throw usage_error("comparison: requires E0 >= 0, K0 >= 0 and k_max >= 1");
  ComparisonCertificate cert;
  cert.E0 = E0;
  cert.K0 = K0;
  cert.threshold = threshold_K0(E0, params);
  cert.k_max = k_max;
  cert.passed = true;
  double const slack = 1e-12;
  double const log_Q0 = std::log(params.Q0);
  for (int k = 1; k <= k_max; ++k)
  {
    ComparisonStep st;
    st.k = k;
    if (E0 == 0.0)
    {
      st.passed = true;
    }
    else
    {
      double const log_prev = std::log(E0) - (k - 1) * log_Q0;
      double const log_rhs = std::log(E0) - k * log_Q0;
      double const log_lhs =
          std::log(params.C) + log_recursion_sum(k, log_prev, std::log(K0), params);
      st.lhs = std::exp(log_lhs);
      st.rhs = std::exp(log_rhs);
      st.passed = log_lhs <= log_rhs + std::log1p(slack);
    }
    cert.passed = cert.passed && st.passed;
    cert.steps.push_back(st);
  }
  return cert;
}

ComparisonCertificate certify_comparison(double E0, double K0, LadderParams const &params,
                                         int k_max)
{
  double const need = threshold_K0(E0, params);
  if (K0 < need * (1.0 - 1e-12))
  {
    std::ostringstream os;
    os.precision(17);
    os << "certify_comparison: K0 = " << K0 << " is below threshold_K0(E0) = " << need
       << " by " << need - K0 << " (relative " << (need - K0) / need << ")";
    throw usage_error(os.str());
  }
  return evaluate_comparison(E0, K0, params, k_max);
}

LevelEnergySeries empirical_ladder(std::span<Snapshot const> snapshots, double K0,
                                   EnergySpec const &espec, int k_max)
{
  if (snapshots.empty())
    throw usage_error("empirical_ladder: empty trajectory");
  if (!(K0 > 0.0) || k_max < 0)
    throw usage_error("empirical_ladder: requires K0 > 0 and k_max >= 0");
  double const T1 = snapshots.front().t, T2 = snapshots.back().t;
  LevelEnergySeries out;
  out.K0 = K0;
  out.l = espec.l;
  for (int k = 0; k <= k_max; ++k)
  {
    double const M = K0 * (1.0 - std::exp2(-double(k)));
    out.M.push_back(M);
    out.E.push_back(energy_functional(snapshots, M, T1, T2, espec));
    if (out.first_zero < 0 && out.E.back() == 0.0)
      out.first_zero = k;
  }

  out.measured_sup = positive_weighted_sup(snapshots, espec.l);
  double lo = 0.0, hi = std::max(out.measured_sup, 0.0);
  if (energy_functional(snapshots, 0.0, T1, T2, espec) == 0.0)
    hi = 0.0;
  for (int it = 0; it < 60 && hi - lo > 1e-15 * hi; ++it)
  {
    double const mid = 0.5 * (lo + hi);
    if (energy_functional(snapshots, mid, T1, T2, espec) == 0.0)
      hi = mid;
    else
      lo = mid;
  }
  out.smallest_zero_K = hi;
  return out;
}

FittedConstant fit_recursion_constant(LevelEnergySeries const &series,
                                      LadderParams const &params)
{
  FittedConstant fc;
  double sum_log = 0.0;
  double const log_K0 = std::log(series.K0);
  for (std::size_t k = 1; k < series.E.size(); ++k)
  {
    if (!(series.E[k - 1] > 0.0) || !(series.E[k] > 0.0))
      continue;
    double const log_ratio =
        std::log(series.E[k]) -
        log_recursion_sum(int(k), std::log(series.E[k - 1]), log_K0, params);
    fc.max_ratio = std::max(fc.max_ratio, std::exp(log_ratio));
    sum_log += log_ratio;
    ++fc.samples;
  }
  if (fc.samples > 0)
    fc.least_squares = std::exp(sum_log / fc.samples);
  return fc;
}

ThresholdBranches threshold_branches(double E0, double initial_weighted_sup,
                                     LadderParams const &params)
{
  ThresholdBranches tb;
  tb.energy_branch = threshold_K0(E0, params);
  tb.initial_sup_branch = 2.0 * initial_weighted_sup;
  tb.combined = std::max(tb.energy_branch, tb.initial_sup_branch);
  return tb;
}

nlohmann::ordered_json to_json(LadderParams const &params)
{
  nlohmann::ordered_json j;
  j["p"] = params.p;
  j["r_star"] = params.r_star;
  j["xi_star"] = params.xi_star;
  j["C"] = params.C;
  j["p_prime"] = params.p_prime;
  j["beta"] = params.beta;
  j["a"] = params.a;
  j["Q0"] = params.Q0;
  return j;
}

nlohmann::ordered_json to_json(ComparisonCertificate const &cert)
{
  nlohmann::ordered_json j;
  j["E0"] = cert.E0;
  j["K0"] = cert.K0;
  j["threshold_K0"] = cert.threshold;
  j["k_max"] = cert.k_max;
  j["passed"] = cert.passed;
  auto &steps = j["steps"] = nlohmann::ordered_json::array();
  for (auto const &s : cert.steps)
    steps.push_back({{"k", s.k}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"passed", s.passed}});
  return j;
}

nlohmann::ordered_json to_json(LevelEnergySeries const &series)
{
  nlohmann::ordered_json j;
  j["K0"] = series.K0;
  j["l"] = series.l;
  j["M"] = series.M;
  j["E"] = series.E;
  j["first_zero"] = series.first_zero;
  j["measured_sup"] = series.measured_sup;
  j["smallest_zero_K"] = series.smallest_zero_K;
  return j;
}

} // namespace ncboltz

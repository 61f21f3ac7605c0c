#pragma once

#include "ncboltz/functionals.hpp"

#include <json.hpp>

#include <span>
#include <vector>

namespace ncboltz
{
// Constants of the level-set recursion
//   E_k <= C sum_i 2^{k(a_i+1)} E_{k-1}^{beta_i} / K0^{a_i}.
struct LadderParams
{
  double p = 0.0;
  double r_star = 0.0;
  double xi_star = 0.0;
  double C = 1.0;
  double p_prime = 0.0;
  std::vector<double> beta;
  std::vector<double> a;
  double Q0 = 0.0;

  // Exponents given directly; Q0 is recomputed. Used for degenerate test sets.
  static LadderParams injected(std::vector<double> beta, std::vector<double> a, double C);
};

// p' = p/(2-p), beta = (1/2 (1 + r*/p'), r*/p, r*, r*),
// a = ((xi* - 2p')/(2p'), (xi* - 2p)/p, xi* - 1, xi* - 2),
// Q0 = max_i 2^{(a_i+1)/(beta_i-1)}. Throws config_error naming the first
// index with beta_i <= 1 or a_i <= 0.
LadderParams derive_constants(double p, double r_star, double xi_star, double C = 1.0);

// K0(E0) = max_i 4^{1/a_i} C^{1/a_i} E0^{(beta_i-1)/a_i} Q0^{beta_i/a_i}.
double threshold_K0(double E0, LadderParams const &params);

struct ComparisonStep
{
  int k = 0;
  double lhs = 0.0; // C sum_i 2^{k(a_i+1)} (E*_{k-1})^{beta_i} / K0^{a_i}
  double rhs = 0.0; // E*_k = E0 Q0^{-k}
  bool passed = false;
};

struct ComparisonCertificate
{
  double E0 = 0.0;
  double K0 = 0.0;
  double threshold = 0.0;
  int k_max = 0;
  std::vector<ComparisonStep> steps;
  bool passed = false;
};

// Evaluates the comparison sequence for any K0 (no precondition); sums are
// formed in the log domain. Relative slack 1e-12.
ComparisonCertificate evaluate_comparison(double E0, double K0, LadderParams const &params,
                                          int k_max);

// As evaluate_comparison, but rejects K0 < threshold_K0(E0) with a usage_error
// that reports the shortfall.
ComparisonCertificate certify_comparison(double E0, double K0, LadderParams const &params,
                                         int k_max);

struct LevelEnergySeries
{
  double K0 = 0.0;
  double l = 0.0;
  std::vector<double> M; // K0 (1 - 2^{-k})
  std::vector<double> E;
  int first_zero = -1;         // smallest k with E_k == 0, or -1
  double measured_sup = 0.0;   // sup_t sup_{x,v} f <v>^l over the window
  double smallest_zero_K = 0.0; // bisection estimate of inf{K : E(K) = 0}
};

// E_k = energy_functional(snapshots, M_k, t_first, t_last, espec) for k = 0..k_max.
LevelEnergySeries empirical_ladder(std::span<Snapshot const> snapshots, double K0,
                                   EnergySpec const &espec, int k_max);

// Recursion constant implied by an observed ladder: the least C for which the
// recursion holds on every step, and the log least-squares fit of
// E_k / sum_i 2^{k(a_i+1)} E_{k-1}^{beta_i} K0^{-a_i}. Steps with E_{k-1} = 0
// or E_k = 0 are skipped; both are 0 when no step qualifies.
struct FittedConstant
{
  double max_ratio = 0.0;
  double least_squares = 0.0;
  int samples = 0;
};
FittedConstant fit_recursion_constant(LevelEnergySeries const &series,
                                      LadderParams const &params);

// The alternative threshold branch 2 sup |<v>^l f0| and the combined K0.
struct ThresholdBranches
{
  double energy_branch = 0.0;
  double initial_sup_branch = 0.0;
  double combined = 0.0;
};
ThresholdBranches threshold_branches(double E0, double initial_weighted_sup,
                                     LadderParams const &params);

nlohmann::ordered_json to_json(LadderParams const &params);
nlohmann::ordered_json to_json(ComparisonCertificate const &cert);
nlohmann::ordered_json to_json(LevelEnergySeries const &series);

} // namespace ncboltz

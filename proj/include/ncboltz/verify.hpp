#pragma once

#include "ncboltz/collision.hpp"
#include "ncboltz/functionals.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ncboltz
{
// One pass/fail comparison inside a case. Upper checks pass when
// value <= limit, lower checks when value > limit.
struct Check
{
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool upper = true;
  bool passed() const { return upper ? value <= limit : value > limit; }
};

struct VerificationReport
{
  std::string case_id;
  nlohmann::ordered_json resolution;
  double measured_error = 0.0; // of the primary check
  double tolerance = 0.0;
  std::optional<double> empirical_constant;
  std::optional<double> refinement_ratio;
  std::vector<Check> checks; // checks.front() is the primary one
  nlohmann::ordered_json details;
  bool passed = false;
};

struct VerifyOptions
{
  std::uint64_t seed = 1;
  GridSpec grid;
  QuadratureSpec quad{16, 8};
  double alpha = 5.0;
  double delta0 = 1.0;
  double tolerance = 5e-2; // relative error of the quadrature comparisons
  int resolution = 12;     // base resolution of the spherical quadratures
  int samples = 4;         // evaluation points per identity
};

// CHANGE_VARS_REGULAR, CHANGE_VARS_SINGULAR, CANCELLATION, PREPOST,
// VPRIME_EXPANSION, REMARK35, CUTOFF_LIPSCHITZ, LALPHA_DISSIPATIVE,
// BETA_BOUNDS, COERCIVITY.
std::vector<std::string> const &verify_case_ids();

// Throws usage_error for an unknown case id.
VerificationReport verify_identity(std::string const &case_id, KernelSpec const &kernel,
                                   VerifyOptions const &options);

nlohmann::ordered_json to_json(VerificationReport const &report);

enum class DecayModel
{
  exponential, // log y = c - rate t
  algebraic    // log y = c - rate log(1 + t)
};

struct DecayFit
{
  double rate = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int samples = 0;
};

// Least squares on the samples with t in [t_lo, t_hi]. Needs at least 10 of
// them, all positive.
DecayFit fit_decay(std::span<double const> t, std::span<double const> y, DecayModel model,
                   double t_lo, double t_hi);

struct HypoellipticityReport
{
  double integral = 0.0;           // int_0^T |(I - Delta_x)^{s'/2} f|^2_{L^2_{x,v}}
  double integral_unsquared = 0.0; // int_0^T |(I - Delta_x)^{s'/2} f|_{L^2_{x,v}}
  double initial_weighted = 0.0;   // |<v>^l f0|^2_{L^2_{x,v}}
  double fitted_C = 0.0;           // least C with D(t) <= C e^{C t}(initial + t) on all snapshots
  std::vector<double> times;
  std::vector<double> cumulative;  // D(t_j)
};

// Needs an inhomogeneous trajectory (n_x > 1) and 0 <= s' < s/(2(s+3)).
HypoellipticityReport hypoellipticity_diagnostic(std::span<Snapshot const> trajectory,
                                                 double s_prime, double s, double l);

} // namespace ncboltz

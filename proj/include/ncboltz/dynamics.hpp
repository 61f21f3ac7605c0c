#pragma once

#include "ncboltz/collision.hpp"
#include "ncboltz/functionals.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ncboltz
{
// Knobs of the modified equation
//   d_t f + v . grad_x f = eps L_alpha(mu + f) + Q(mu + f chi(<v>^k0 f), mu + f)
// and of the diagnostics recorded along a run.
struct RunConfig
{
  KernelSpec kernel;
  GridSpec grid;
  QuadratureSpec quad{16, 8};
  double epsilon = 0.0;
  double alpha = 5.0;
  double k0 = 14.0;
  double delta0 = 1.0e4;
  double dt = 0.01;
  double t_end = 8.0;
  bool cutoff_enabled = true;
  bool correction_enabled = true;
  CorrectionWeight correction_weight = CorrectionWeight::maxwellian;
  int snapshot_every = 1;

  double k = 20.0;        // weight of the L2_k column
  double k1 = 14.0;       // weight of the L2_k1 column
  double s_prime = 0.01;  // order of the H^{s'}_x column
  double cg_tol = 1e-10;
  int cg_max_iter = 5000;
  int checkpoint_every = 0; // in snapshots; 0 disables

  void validate() const;
};

struct DiagnosticRow
{
  double t = 0.0;
  double L2_k = 0.0;    // |<v>^k f|_{L^2}
  double Linf_k0 = 0.0; // sup |<v>^k0 f|
  double entropy = 0.0; // int F log F with F clipped below at 0
  Moments invariants;   // of F = mu + f
  double Hs_x = 0.0;    // |(1 - Delta_x)^{s'/2} f|_{L^2}
  double L2_k1 = 0.0;
  double min_F = 0.0;
  bool cutoff_active = false;
};

DiagnosticRow diagnostics(double t, Field const &f, Field const &mu, RunConfig const &cfg,
                          bool cutoff_active);

struct SimState
{
  double t = 0.0;
  Field f;
  std::vector<DiagnosticRow> diagnostics;
};

// L_alpha f = -(w f - div(w grad f)), w = <v>^{2 alpha}, in flux form with
// face weights at midpoints and zero flux through the box boundary.
Field l_alpha_apply(Field const &f, double alpha);

// Smooth bump: 1 on |x| <= delta0, 0 on |x| >= 2 delta0, built from
// exp(-1/t) / (exp(-1/t) + exp(-1/(1-t))).
double chi(double x, double delta0);
double chi_derivative(double x, double delta0);

// f chi(<v>^k0 f) pointwise.
Field chi_cutoff(Field const &f, double k0, double delta0);

// True when chi(<v>^k0 f) < 1 somewhere.
bool cutoff_active(Field const &f, double k0, double delta0);

// (I - tau L_alpha) x = b by Jacobi-preconditioned conjugate gradients.
struct SolveReport
{
  int iterations = 0;
  double relative_residual = 0.0;
};
Field solve_implicit(Field const &b, double alpha, double tau, double tol, int max_iter,
                     SolveReport *report = nullptr);

struct StepInfo
{
  bool cutoff_active = false;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  double implicit_energy_before = 0.0; // |F|^2 before and after the implicit substep
  double implicit_energy_after = 0.0;
};

// One first-order IMEX step: exact transport, explicit Q (corrected if
// enabled), implicit eps L_alpha. Throws numerical_failure on a stalled solve
// or a non-finite state.
SimState step(SimState const &state, RunConfig const &cfg, StepInfo *info = nullptr);

struct RunResult
{
  Trajectory trajectory;
  std::vector<DiagnosticRow> diagnostics;
  std::vector<std::string> warnings;
  std::string failure; // empty on success
  int steps = 0;
};

// Integrates to t_end, recording a snapshot and a diagnostics row every
// snapshot_every steps (and at t = 0). Checkpoints go to checkpoint_dir when it
// is nonempty. A failing step ends the run with the partial record kept.
RunResult run(RunConfig const &cfg, Field const &f0,
              std::filesystem::path const &checkpoint_dir = {}, std::uint64_t config_hash = 0);

// Small perturbation with Pf = 0:
// A mu (v1^2 - v2^2)(1 + b cos(2 pi x / Lx)) + A b mu v1 sin(2 pi x / Lx),
// restricted to the support ball.
Field anisotropic_perturbation(GridSpec const &grid, double amplitude, double modulation);

} // namespace ncboltz

#include "ncboltz/dynamics.hpp"

#include "ncboltz/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace ncboltz
{
namespace
{
// Node and face weights of L_alpha on one velocity cell.
struct LAlphaWeights
{
  int n = 0;
  double inv_h2 = 0.0;
  std::vector<double> node;
  std::array<std::vector<double>, 3> face; // face[d][q]: between q and q + e_d

  LAlphaWeights(GridSpec const &g, double alpha)
      : n(g.n_v), inv_h2(1.0 / (g.h() * g.h())), node(g.nodes_v())
  {
    double const hh = 0.5 * g.h();
    for (auto &f : face)
      f.assign(g.nodes_v(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
        {
          std::size_t const q = g.index(0, i, j, k);
          Vec3 const v = g.velocity(i, j, k);
          node[q] = std::pow(1.0 + norm2(v), alpha);
          if (i + 1 < n)
            face[0][q] = std::pow(1.0 + norm2(v + Vec3{hh, 0, 0}), alpha);
          if (j + 1 < n)
            face[1][q] = std::pow(1.0 + norm2(v + Vec3{0, hh, 0}), alpha);
          if (k + 1 < n)
            face[2][q] = std::pow(1.0 + norm2(v + Vec3{0, 0, hh}), alpha);
        }
  }

  std::size_t stride(int d) const { return d == 0 ? std::size_t(n) * n : d == 1 ? n : 1; }

  // out = L_alpha x on one cell.
  void apply(double const *x, double *out) const
  {
    std::size_t const nv = node.size();
    for (std::size_t q = 0; q < nv; ++q)
      out[q] = -node[q] * x[q];
    for (int d = 0; d < 3; ++d)
    {
      std::size_t const st = stride(d);
      auto const &w = face[d];
      for (std::size_t q = 0; q < nv; ++q)
      {
        if (w[q] == 0.0)
          continue;
        double const flux = w[q] * (x[q + st] - x[q]) * inv_h2;
        out[q] += flux;
        out[q + st] -= flux;
      }
    }
  }

  std::vector<double> diagonal() const
  {
    std::vector<double> dg(node);
    for (int d = 0; d < 3; ++d)
    {
      std::size_t const st = stride(d);
      for (std::size_t q = 0; q < node.size(); ++q)
        if (face[d][q] != 0.0)
        {
          dg[q] += face[d][q] * inv_h2;
          dg[q + st] += face[d][q] * inv_h2;
        }
    }
    return dg;
  }
};

double psi(double t)
{
  if (t <= 0.0)
    return 0.0;
  if (t >= 1.0)
    return 1.0;
  double const a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double psi_derivative(double t)
{
  if (t <= 0.0 || t >= 1.0)
    return 0.0;
  double const a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  double const da = a / (t * t), db = -b / ((1.0 - t) * (1.0 - t));
  return (da * b - a * db) / ((a + b) * (a + b));
}

std::vector<double> bracket(GridSpec const &g, double e)
{
  std::vector<double> w(g.nodes_v());
  for (std::size_t q = 0; q < w.size(); ++q)
    w[q] = std::pow(1.0 + norm2(g.velocity(q)), 0.5 * e);
  return w;
}

double squared_norm(std::vector<double> const &x)
{
  double acc = 0.0;
  for (double v : x)
    acc += v * v;
  return acc;
}

void check_finite(Field const &f, char const *where)
{
  for (double x : f.values())
    if (!std::isfinite(x))
      throw numerical_failure(std::string(where) + ": non-finite value");
}

} // namespace

void RunConfig::validate() const
{
  kernel.validate();
  grid.validate();
  quad.validate();
  std::ostringstream os;
  if (!(dt > 0.0))
    os << "run.dt must be positive";
  else if (!(t_end >= 0.0))
    os << "run.t_end must be nonnegative";
  else if (!(alpha >= 0.0))
    os << "run.alpha must be nonnegative";
  else if (!(epsilon >= 0.0 && epsilon <= 1.0))
    os << "run.epsilon must lie in [0, 1]";
  else if (!(delta0 > 0.0))
    os << "run.delta0 must be positive";
  else if (snapshot_every < 1)
    os << "run.snapshot_every must be >= 1";
  else if (checkpoint_every < 0)
    os << "run.checkpoint_every must be >= 0";
  else if (!(cg_tol > 0.0) || cg_max_iter < 1)
    os << "run.cg_tol must be positive and run.cg_max_iter >= 1";
  else if (!(s_prime >= 0.0))
    os << "run.s_prime must be nonnegative";
  else
    return;
  throw config_error(os.str());
}

Field l_alpha_apply(Field const &f, double alpha)
{
  GridSpec const &g = f.grid();
  LAlphaWeights const w(g, alpha);
  std::size_t const nv = g.nodes_v();
  std::vector<double> out(g.size());
  for (int ix = 0; ix < g.n_x; ++ix)
    w.apply(f.data().data() + std::size_t(ix) * nv, out.data() + std::size_t(ix) * nv);
  return Field(g, std::move(out));
}

double chi(double x, double delta0) { return psi((2.0 * delta0 - std::abs(x)) / delta0); }

double chi_derivative(double x, double delta0)
{
  double const sgn = x > 0.0 ? 1.0 : x < 0.0 ? -1.0 : 0.0;
  return -sgn * psi_derivative((2.0 * delta0 - std::abs(x)) / delta0) / delta0;
}

Field chi_cutoff(Field const &f, double k0, double delta0)
{
  if (!(delta0 > 0.0))
    throw usage_error("chi_cutoff: delta0 must be positive");
  GridSpec const &g = f.grid();
  auto const w = bracket(g, k0);
  std::size_t const nv = g.nodes_v();
  std::vector<double> out(f.data());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= chi(w[i % nv] * out[i], delta0);
  return Field(g, std::move(out));
}

bool cutoff_active(Field const &f, double k0, double delta0)
{
  auto const w = bracket(f.grid(), k0);
  std::size_t const nv = f.grid().nodes_v();
  for (std::size_t i = 0; i < f.values().size(); ++i)
    if (std::abs(w[i % nv] * f[i]) > delta0)
      return true;
  return false;
}

Field solve_implicit(Field const &b, double alpha, double tau, double tol, int max_iter,
                     SolveReport *report)
{
  GridSpec const &g = b.grid();
  LAlphaWeights const w(g, alpha);
  std::size_t const nv = g.nodes_v();
  std::size_t const n = g.size();
  std::vector<double> dcell = w.diagonal();
  std::vector<double> inv_diag(n);
  for (std::size_t i = 0; i < n; ++i)
    inv_diag[i] = 1.0 / (1.0 + tau * dcell[i % nv]);

  auto apply_A = [&](std::vector<double> const &x, std::vector<double> &out) {
    for (int ix = 0; ix < g.n_x; ++ix)
      w.apply(x.data() + std::size_t(ix) * nv, out.data() + std::size_t(ix) * nv);
    for (std::size_t i = 0; i < n; ++i)
      out[i] = x[i] - tau * out[i];
  };

  std::vector<double> x(b.data()), r(n), z(n), p(n), Ap(n);
  apply_A(x, Ap);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - Ap[i];
  double const bnorm = std::sqrt(squared_norm(b.data()));
  SolveReport rep;
  if (bnorm == 0.0)
  {
    if (report)
      *report = rep;
    return Field(g, std::vector<double>(n, 0.0));
  }
  for (std::size_t i = 0; i < n; ++i)
    z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    rz += r[i] * z[i];
  rep.relative_residual = std::sqrt(squared_norm(r)) / bnorm;
  while (rep.relative_residual > tol)
  {
    if (rep.iterations >= max_iter)
    {
      std::ostringstream os;
      os.precision(3);
      os << "implicit solve: no convergence after " << max_iter
         << " iterations, relative residual " << std::scientific << rep.relative_residual;
      throw numerical_failure(os.str());
    }
    apply_A(p, Ap);
    double pAp = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      pAp += p[i] * Ap[i];
    double const step_len = rz / pAp;
    for (std::size_t i = 0; i < n; ++i)
    {
      x[i] += step_len * p[i];
      r[i] -= step_len * Ap[i];
      z[i] = inv_diag[i] * r[i];
    }
    double rz_new = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      rz_new += r[i] * z[i];
    double const beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i)
      p[i] = z[i] + beta * p[i];
    ++rep.iterations;
    rep.relative_residual = std::sqrt(squared_norm(r)) / bnorm;
  }
  if (report)
    *report = rep;
  return Field(g, std::move(x));
}

SimState step(SimState const &state, RunConfig const &cfg, StepInfo *info)
{
  GridSpec const &g = state.f.grid();
  Field const mu = make_maxwellian(g);
  StepInfo si;

  Field f = free_transport(state.f, cfg.dt);

  Field const fc = cfg.cutoff_enabled ? chi_cutoff(f, cfg.k0, cfg.delta0) : f;
  si.cutoff_active = cfg.cutoff_enabled && cutoff_active(f, cfg.k0, cfg.delta0);
  Field q = q_apply(mu + fc, mu + f, cfg.kernel, cfg.quad).total;
  if (cfg.correction_enabled)
    q = conservative_correction(q, cfg.correction_weight);
  f = f + q.scaled(cfg.dt);

  if (cfg.epsilon > 0.0)
  {
    Field const F0 = mu + f;
    SolveReport rep;
    Field const F1 =
        solve_implicit(F0, cfg.alpha, cfg.dt * cfg.epsilon, cfg.cg_tol, cfg.cg_max_iter, &rep);
    si.cg_iterations = rep.iterations;
    si.cg_residual = rep.relative_residual;
    si.implicit_energy_before = squared_norm(F0.data());
    si.implicit_energy_after = squared_norm(F1.data());
    f = F1 - mu;
  }
  check_finite(f, "step");
  if (info)
    *info = si;
  return SimState{state.t + cfg.dt, std::move(f), state.diagnostics};
}

DiagnosticRow diagnostics(double t, Field const &f, Field const &mu, RunConfig const &cfg,
                          bool active)
{
  GridSpec const &g = f.grid();
  DiagnosticRow row;
  row.t = t;
  row.L2_k = norm(f, NormSpec::lpq(2.0, cfg.k));
  row.L2_k1 = norm(f, NormSpec::lpq(2.0, cfg.k1));
  row.Linf_k0 = weighted_sup(f, cfg.k0);
  Field const F = mu + f;
  double ent = 0.0, mn = F[0];
  for (double x : F.values())
  {
    if (x > 0.0)
      ent += x * std::log(x);
    mn = std::min(mn, x);
  }
  row.entropy = ent * g.cell_volume() * g.dx();
  row.min_F = mn;
  row.invariants = moments(F);
  row.Hs_x = norm(spatial_multiplier(f, cfg.s_prime), NormSpec::lpq(2.0, 0.0));
  row.cutoff_active = active;
  return row;
}

RunResult run(RunConfig const &cfg, Field const &f0, std::filesystem::path const &checkpoint_dir,
              std::uint64_t config_hash)
{
  cfg.validate();
  if (!(f0.grid() == cfg.grid))
    throw usage_error("run: initial datum is not on the configured grid");
  Field const mu = make_maxwellian(cfg.grid);
  RunResult res;

  double const nu = max_loss_frequency(mu + f0, cfg.kernel, cfg.quad);
  if (cfg.dt > 0.5 / nu)
  {
    std::ostringstream os;
    os.precision(6);
    os << "dt = " << cfg.dt << " exceeds 0.5 / max loss frequency = " << 0.5 / nu;
    res.warnings.push_back(os.str());
  }
  if (!checkpoint_dir.empty())
    std::filesystem::create_directories(checkpoint_dir);

  auto const n_steps = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
  SimState state{0.0, f0, {}};
  int snapshot_index = 0;
  auto record = [&](bool active) {
    res.trajectory.push_back({state.t, state.f});
    res.diagnostics.push_back(diagnostics(state.t, state.f, mu, cfg, active));
    if (!checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        snapshot_index % cfg.checkpoint_every == 0)
    {
      char name[32];
      std::snprintf(name, sizeof name, "ckpt_%06d", snapshot_index);
      write_checkpoint(checkpoint_dir / name, state.f, state.t, config_hash);
    }
    ++snapshot_index;
  };
  record(cfg.cutoff_enabled && cutoff_active(f0, cfg.k0, cfg.delta0));

  bool any_active = false;
  int contraction_violations = 0;
  for (long n = 1; n <= n_steps; ++n)
  {
    StepInfo info;
    try
    {
      state = step(state, cfg, &info);
    }
    catch (numerical_failure const &e)
    {
      res.failure = "step " + std::to_string(n) + ": " + e.what();
      break;
    }
    state.t = n * cfg.dt;
    ++res.steps;
    any_active = any_active || info.cutoff_active;
    if (cfg.epsilon > 0.0 && info.implicit_energy_after > info.implicit_energy_before)
      ++contraction_violations;
    if (n % cfg.snapshot_every == 0 || n == n_steps)
      record(info.cutoff_active);
  }
  if (!checkpoint_dir.empty())
    write_checkpoint(checkpoint_dir / "final", state.f, state.t, config_hash);
  if (any_active)
    res.warnings.push_back("cutoff chi was active on at least one step");
  if (contraction_violations > 0)
    res.warnings.push_back("implicit substep increased |F|_{L^2} on " +
                           std::to_string(contraction_violations) + " steps");
  return res;
}

Field anisotropic_perturbation(GridSpec const &grid, double amplitude, double modulation)
{
  Field const mu = make_maxwellian(grid);
  double const r2 = grid.support_radius * grid.support_radius;
  std::size_t const nv = grid.nodes_v();
  std::vector<double> out(grid.size(), 0.0);
  for (int ix = 0; ix < grid.n_x; ++ix)
  {
    double const phase = 2.0 * std::numbers::pi * grid.x_node(ix) / grid.Lx;
    double const c = grid.n_x > 1 ? std::cos(phase) : 0.0;
    double const s = grid.n_x > 1 ? std::sin(phase) : 0.0;
    for (std::size_t q = 0; q < nv; ++q)
    {
      Vec3 const v = grid.velocity(q);
      if (norm2(v) > r2)
        continue;
      std::size_t const i = std::size_t(ix) * nv + q;
      out[i] = amplitude * mu[i] *
               ((v.x * v.x - v.y * v.y) * (1.0 + modulation * c) + modulation * v.x * s);
    }
  }
  return Field(grid, std::move(out));
}

} // namespace ncboltz

#include "cli.hpp"

#include "config.hpp"

#include "ncboltz/degiorgi.hpp"
#include "ncboltz/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace ncboltz::cli
{
namespace
{
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

json config_json(Settings const &s)
{
  json j = json::object();
  for (auto const &[k, v] : s.echo())
    j[k] = v;
  return j;
}

void write_file(fs::path const &path, std::string const &content)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw usage_error("cannot write " + path.string());
  out << content;
}

void write_json(fs::path const &path, json const &j) { write_file(path, j.dump(2) + "\n"); }

std::string csv_echo(Settings const &s)
{
  std::string out;
  for (auto const &[k, v] : s.echo())
    out += "# " + k + " = " + v + "\n";
  return out;
}

std::string diagnostics_csv(Settings const &s, std::vector<DiagnosticRow> const &rows)
{
  std::string out = csv_echo(s);
  out += "t,L2_k,Linf_k0,entropy,mass,momentum_1,momentum_2,momentum_3,energy,Hs_x,L2_k1,min_F,"
         "cutoff_active\n";
  for (auto const &r : rows)
  {
    double const cols[] = {r.t,
                           r.L2_k,
                           r.Linf_k0,
                           r.entropy,
                           r.invariants.mass,
                           r.invariants.momentum.x,
                           r.invariants.momentum.y,
                           r.invariants.momentum.z,
                           r.invariants.energy,
                           r.Hs_x,
                           r.L2_k1,
                           r.min_F};
    for (double c : cols)
      out += format_double(c) + ",";
    out += r.cutoff_active ? "1\n" : "0\n";
  }
  return out;
}

void clear_checkpoints(fs::path const &dir)
{
  if (!fs::is_directory(dir))
    return;
  std::vector<fs::path> stale;
  for (auto const &e : fs::directory_iterator(dir))
  {
    std::string const name = e.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0 || name.rfind("final.", 0) == 0)
      stale.push_back(e.path());
  }
  for (auto const &p : stale)
    fs::remove(p);
}

int cmd_simulate(Settings const &s, fs::path const &out_dir, std::ostream &out)
{
  Field const f0 = anisotropic_perturbation(s.run.grid, s.init_amplitude, s.init_modulation);
  fs::path const ckpt = out_dir / "checkpoints";
  clear_checkpoints(ckpt);
  std::uint64_t const hash = fnv1a(s.echo_text());
  RunResult const r = run(s.run, f0, ckpt, hash);

  write_file(out_dir / "diagnostics.csv", diagnostics_csv(s, r.diagnostics));

  json j;
  j["config"] = config_json(s);
  j["config_hash"] = hash;
  j["steps"] = r.steps;
  j["snapshots"] = r.trajectory.size();
  j["final_time"] = r.diagnostics.empty() ? 0.0 : r.diagnostics.back().t;
  j["warnings"] = r.warnings;
  j["failure"] = r.failure;
  if (s.run.grid.n_x > 1 && r.trajectory.size() >= 2)
  {
    double const upper = s.run.kernel.s / (2.0 * (s.run.kernel.s + 3.0));
    if (s.run.s_prime < upper)
    {
      HypoellipticityReport const h =
          hypoellipticity_diagnostic(r.trajectory, s.run.s_prime, s.run.kernel.s, s.hypo_l);
      j["hypoellipticity"] = {{"s_prime", s.run.s_prime},
                              {"l", s.hypo_l},
                              {"integral_squared", h.integral},
                              {"integral_unsquared", h.integral_unsquared},
                              {"initial_weighted_squared", h.initial_weighted},
                              {"fitted_C", h.fitted_C}};
    }
  }
  write_json(out_dir / "run.json", j);

  for (auto const &w : r.warnings)
    out << "warning: " << w << "\n";
  if (!r.failure.empty())
  {
    out << "simulate: failed: " << r.failure << "\n";
    return 1;
  }
  out << "simulate: " << r.steps << " steps, " << r.trajectory.size() << " snapshots\n";
  return 0;
}

int cmd_verify(Settings const &s, fs::path const &out_dir, std::ostream &out)
{
  std::vector<std::string> const cases = s.cases.empty() ? verify_case_ids() : s.cases;
  json j;
  j["config"] = config_json(s);
  json reports = json::array();
  bool all = true;
  for (auto const &c : cases)
  {
    VerificationReport rep;
    try
    {
      rep = verify_identity(c, s.run.kernel, s.verify);
    }
    catch (numerical_failure const &e)
    {
      rep.case_id = c;
      rep.passed = false;
      rep.details = {{"numerical_failure", e.what()}};
    }
    all = all && rep.passed;
    out << c << ": " << (rep.passed ? "pass" : "FAIL") << " (" << format_double(rep.measured_error)
        << " vs " << format_double(rep.tolerance) << ")\n";
    json one = to_json(rep);
    write_json(out_dir / "verify" / (c + ".json"), {{"config", config_json(s)}, {"report", one}});
    reports.push_back(std::move(one));
  }
  j["reports"] = reports;
  j["passed"] = all;
  write_json(out_dir / "verify.json", j);
  return all ? 0 : 1;
}

Trajectory load_checkpoints(fs::path const &dir)
{
  if (!fs::is_directory(dir))
    throw usage_error("degiorgi: checkpoint directory " + dir.string() + " does not exist");
  std::vector<fs::path> bases;
  for (auto const &e : fs::directory_iterator(dir))
  {
    std::string const name = e.path().filename().string();
    if (name.rfind("ckpt_", 0) == 0 && e.path().extension() == ".meta")
      bases.push_back(dir / e.path().stem());
  }
  std::sort(bases.begin(), bases.end());
  if (bases.empty())
    throw usage_error("degiorgi: no ckpt_* checkpoints in " + dir.string());
  Trajectory traj;
  for (auto const &b : bases)
  {
    CheckpointMeta meta;
    Field f = read_checkpoint(b, &meta);
    traj.push_back({meta.t, std::move(f)});
  }
  return traj;
}

int cmd_degiorgi(Settings const &s, fs::path const &out_dir, std::ostream &out)
{
  auto const &d = s.degiorgi;
  LadderParams const params = derive_constants(d.p, d.r_star, d.xi_star, d.C);
  ComparisonCertificate const cert = certify_comparison(d.E0, d.K0, params, d.k_max);

  json j;
  j["config"] = config_json(s);
  j["ladder"] = to_json(params);
  j["certificate"] = to_json(cert);

  if (!d.checkpoints.empty())
  {
    d.energy.validate();
    Trajectory const traj = load_checkpoints(d.checkpoints);
    double const T1 = traj.front().t, T2 = traj.back().t;
    double const E0 = energy_functional(traj, 0.0, T1, T2, d.energy);
    double const sup0 = std::max(weighted_sup(traj.front().f, d.energy.l), 0.0);
    ThresholdBranches const tb = threshold_branches(E0, sup0, params);
    json emp;
    emp["snapshots"] = traj.size();
    emp["T1"] = T1;
    emp["T2"] = T2;
    emp["zeroth_level_energy"] = E0;
    emp["initial_weighted_sup"] = sup0;
    emp["threshold_energy_branch"] = tb.energy_branch;
    emp["threshold_initial_sup_branch"] = tb.initial_sup_branch;
    emp["K0"] = tb.combined;
    if (tb.combined > 0.0)
    {
      LevelEnergySeries const series = empirical_ladder(traj, tb.combined, d.energy, d.ladder_k_max);
      FittedConstant const fc = fit_recursion_constant(series, params);
      emp["series"] = to_json(series);
      emp["fitted_C_max_ratio"] = fc.max_ratio;
      emp["fitted_C_least_squares"] = fc.least_squares;
      emp["fitted_C_samples"] = fc.samples;
      emp["sup_bound_holds"] = series.measured_sup <= tb.combined;
    }
    j["empirical"] = emp;
  }
  write_json(out_dir / "degiorgi.json", j);
  out << "degiorgi: Q0 = " << format_double(params.Q0)
      << ", threshold_K0 = " << format_double(cert.threshold) << ", certificate "
      << (cert.passed ? "pass" : "FAIL") << "\n";
  return cert.passed ? 0 : 1;
}

int cmd_fit(Settings const &s, fs::path const &out_dir, std::ostream &out)
{
  auto const &f = s.fit;
  if (f.input.empty())
    throw usage_error("fit-decay: set fit.input to a diagnostics CSV");
  DecayModel model;
  if (f.model == "exponential")
    model = DecayModel::exponential;
  else if (f.model == "algebraic")
    model = DecayModel::algebraic;
  else
    throw config_error("config key 'fit.model': expected exponential or algebraic, got '" +
                       f.model + "'");
  std::ifstream in(f.input);
  if (!in)
    throw usage_error("fit-decay: cannot read " + f.input);
  std::string line;
  std::vector<std::string> header;
  std::vector<double> t, y;
  std::size_t t_col = 0, y_col = 0;
  while (std::getline(in, line))
  {
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    if (header.empty())
    {
      header = cells;
      auto find = [&](std::string const &name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
          throw usage_error("fit-decay: column '" + name + "' not in " + f.input);
        return std::size_t(it - header.begin());
      };
      t_col = find("t");
      y_col = find(f.column);
      continue;
    }
    if (cells.size() != header.size())
      throw usage_error("fit-decay: ragged row in " + f.input);
    t.push_back(std::stod(cells[t_col]));
    y.push_back(std::stod(cells[y_col]));
  }
  DecayFit const fit = fit_decay(t, y, model, f.t_lo, f.t_hi);
  json j;
  j["config"] = config_json(s);
  j["column"] = f.column;
  j["model"] = f.model;
  j["rate"] = fit.rate;
  j["intercept"] = fit.intercept;
  j["r2"] = fit.r2;
  j["samples"] = fit.samples;
  if (model == DecayModel::algebraic && s.run.kernel.gamma < 0.0)
    j["reference_exponent"] = (s.run.k - s.run.k1) / -s.run.kernel.gamma;
  write_json(out_dir / "fit.json", j);
  out << "fit-decay: " << f.column << " rate = " << format_double(fit.rate)
      << ", r2 = " << format_double(fit.r2) << "\n";
  return 0;
}

} // namespace

int run_cli(int argc, char const *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Non-cutoff Boltzmann perturbation solver and verification harness"};
  app.fallthrough();
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string cases;
  bool print_config = false;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--set", overrides, "override a configuration key (key=value)");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  auto *simulate = app.add_subcommand("simulate", "integrate the perturbation equation");
  auto *verify = app.add_subcommand("verify", "check the discrete identities and bounds");
  verify->add_option("--cases", cases, "comma-separated case ids");
  auto *degiorgi = app.add_subcommand("degiorgi", "ladder constants, certificate, empirical ladder");
  auto *fit = app.add_subcommand("fit-decay", "fit a decay rate to a diagnostics column");
  app.require_subcommand(0, 1);

  try
  {
    app.parse(argc, argv);
  }
  catch (CLI::CallForHelp const &)
  {
    out << app.help();
    return 0;
  }
  catch (CLI::ParseError const &e)
  {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try
  {
    Settings s;
    if (!config_path.empty())
      s.load(config_path);
    for (auto const &o : overrides)
    {
      auto const eq = o.find('=');
      if (eq == std::string::npos)
        throw usage_error("--set expects key=value, got '" + o + "'");
      s.set(o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed)
      s.set("seed", std::to_string(*seed));
    if (!cases.empty())
      s.set("verify.cases", cases);
    s.resolve();

    if (print_config)
    {
      out << s.echo_text();
      return 0;
    }
    if (simulate->parsed())
      return cmd_simulate(s, out_dir, out);
    if (verify->parsed())
      return cmd_verify(s, out_dir, out);
    if (degiorgi->parsed())
      return cmd_degiorgi(s, out_dir, out);
    if (fit->parsed())
      return cmd_fit(s, out_dir, out);
    err << "error: a subcommand is required (simulate, verify, degiorgi, fit-decay)\n";
    return 2;
  }
  catch (config_error const &e)
  {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  catch (usage_error const &e)
  {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
  catch (domain_error const &e)
  {
    err << "domain error: " << e.what() << "\n";
    return 2;
  }
  catch (std::exception const &e)
  {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

} // namespace ncboltz::cli

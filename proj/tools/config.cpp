#include "config.hpp"

#include "ncboltz/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ncboltz::cli
{
namespace
{
std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string const &key, std::string const &value, char const *what)
{
  throw config_error("config key '" + key + "': cannot parse '" + value + "' as " + what);
}

double parse_double(std::string const &key, std::string const &value)
{
  double x = 0.0;
  auto const *end = value.data() + value.size();
  auto const r = std::from_chars(value.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(x))
    bad_value(key, value, "a finite real number");
  return x;
}

int parse_int(std::string const &key, std::string const &value)
{
  int x = 0;
  auto const *end = value.data() + value.size();
  auto const r = std::from_chars(value.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end)
    bad_value(key, value, "an integer");
  return x;
}

std::uint64_t parse_u64(std::string const &key, std::string const &value)
{
  std::uint64_t x = 0;
  auto const *end = value.data() + value.size();
  auto const r = std::from_chars(value.data(), end, x);
  if (r.ec != std::errc() || r.ptr != end)
    bad_value(key, value, "a nonnegative integer");
  return x;
}

bool parse_bool(std::string const &key, std::string const &value)
{
  if (value == "true" || value == "1")
    return true;
  if (value == "false" || value == "0")
    return false;
  bad_value(key, value, "a boolean (true/false)");
}

std::vector<std::string> split_list(std::string const &value)
{
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto t = trim(item); !t.empty())
      out.push_back(t);
  return out;
}

std::string join_list(std::vector<std::string> const &v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + v[i];
  return out;
}

} // namespace

std::string format_double(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Settings::Settings()
{
  run.checkpoint_every = 10;
  bind();
}

void Settings::bind()
{
  auto real = [this](std::string key, double &ref) {
    entries_.push_back({key, [&ref, key](std::string const &v) { ref = parse_double(key, v); },
                        [&ref] { return format_double(ref); }});
  };
  auto integer = [this](std::string key, int &ref) {
    entries_.push_back({key, [&ref, key](std::string const &v) { ref = parse_int(key, v); },
                        [&ref] { return std::to_string(ref); }});
  };
  auto boolean = [this](std::string key, bool &ref) {
    entries_.push_back({key, [&ref, key](std::string const &v) { ref = parse_bool(key, v); },
                        [&ref] { return std::string(ref ? "true" : "false"); }});
  };
  auto text = [this](std::string key, std::string &ref) {
    entries_.push_back({key, [&ref](std::string const &v) { ref = v; }, [&ref] { return ref; }});
  };

  entries_.push_back({"seed", [this](std::string const &v) { verify.seed = parse_u64("seed", v); },
                      [this] { return std::to_string(verify.seed); }});

  real("kernel.gamma", run.kernel.gamma);
  real("kernel.s", run.kernel.s);
  real("kernel.eta", run.kernel.eta);
  real("kernel.s_star", run.kernel.s_star);
  real("kernel.theta_min", run.kernel.theta_min);
  real("kernel.kappa", run.kernel.kappa);

  real("grid.R", run.grid.R);
  integer("grid.n_v", run.grid.n_v);
  integer("grid.n_x", run.grid.n_x);
  entries_.push_back({"grid.support_radius",
                      [this](std::string const &v) {
                        run.grid.support_radius = parse_double("grid.support_radius", v);
                        support_radius_set_ = true;
                      },
                      [this] { return format_double(run.grid.support_radius); }});
  real("grid.Lx", run.grid.Lx);

  integer("quad.n_theta", run.quad.n_theta);
  integer("quad.n_phi", run.quad.n_phi);
  entries_.push_back({"quad.rule",
                      [this](std::string const &v) {
                        if (v == "midpoint_graded")
                          run.quad.rule = ThetaRule::midpoint_graded;
                        else if (v == "uniform")
                          run.quad.rule = ThetaRule::uniform;
                        else
                          bad_value("quad.rule", v, "midpoint_graded or uniform");
                      },
                      [this] {
                        return std::string(run.quad.rule == ThetaRule::uniform ? "uniform"
                                                                               : "midpoint_graded");
                      }});
  entries_.push_back({"quad.interpolation",
                      [this](std::string const &v) {
                        if (v == "trilinear")
                          run.quad.interpolation = Interpolation::trilinear;
                        else if (v == "maxwellian_ratio")
                          run.quad.interpolation = Interpolation::maxwellian_ratio;
                        else
                          bad_value("quad.interpolation", v, "trilinear or maxwellian_ratio");
                      },
                      [this] {
                        return std::string(run.quad.interpolation == Interpolation::trilinear
                                               ? "trilinear"
                                               : "maxwellian_ratio");
                      }});

  real("run.epsilon", run.epsilon);
  real("run.alpha", run.alpha);
  real("run.k0", run.k0);
  real("run.delta0", run.delta0);
  real("run.dt", run.dt);
  real("run.t_end", run.t_end);
  boolean("run.cutoff", run.cutoff_enabled);
  boolean("run.correction", run.correction_enabled);
  entries_.push_back({"run.correction_weight",
                      [this](std::string const &v) {
                        if (v == "uniform")
                          run.correction_weight = CorrectionWeight::uniform;
                        else if (v == "maxwellian")
                          run.correction_weight = CorrectionWeight::maxwellian;
                        else
                          bad_value("run.correction_weight", v, "uniform or maxwellian");
                      },
                      [this] {
                        return std::string(run.correction_weight == CorrectionWeight::uniform
                                               ? "uniform"
                                               : "maxwellian");
                      }});
  integer("run.snapshot_every", run.snapshot_every);
  real("run.k", run.k);
  real("run.k1", run.k1);
  real("run.s_prime", run.s_prime);
  real("run.cg_tol", run.cg_tol);
  integer("run.cg_max_iter", run.cg_max_iter);
  integer("run.checkpoint_every", run.checkpoint_every);

  real("init.amplitude", init_amplitude);
  real("init.modulation", init_modulation);
  real("hypo.l", hypo_l);

  real("verify.tolerance", verify.tolerance);
  integer("verify.resolution", verify.resolution);
  integer("verify.samples", verify.samples);
  real("verify.alpha", verify.alpha);
  real("verify.delta0", verify.delta0);
  entries_.push_back({"verify.cases", [this](std::string const &v) { cases = split_list(v); },
                      [this] { return join_list(cases); }});

  real("degiorgi.p", degiorgi.p);
  real("degiorgi.r_star", degiorgi.r_star);
  real("degiorgi.xi_star", degiorgi.xi_star);
  real("degiorgi.C", degiorgi.C);
  real("degiorgi.E0", degiorgi.E0);
  real("degiorgi.K0", degiorgi.K0);
  integer("degiorgi.k_max", degiorgi.k_max);
  text("degiorgi.checkpoints", degiorgi.checkpoints);
  integer("degiorgi.ladder_k_max", degiorgi.ladder_k_max);
  real("degiorgi.energy_p", degiorgi.energy.p);
  real("degiorgi.s_dd", degiorgi.energy.s_dd);
  real("degiorgi.C0", degiorgi.energy.C0);
  real("degiorgi.l", degiorgi.energy.l);

  text("fit.input", fit.input);
  text("fit.column", fit.column);
  text("fit.model", fit.model);
  real("fit.t_lo", fit.t_lo);
  real("fit.t_hi", fit.t_hi);
}

void Settings::set(std::string const &key, std::string const &value)
{
  for (auto &e : entries_)
    if (e.key == key)
    {
      e.set(trim(value));
      return;
    }
  throw config_error("unknown config key '" + key + "'");
}

void Settings::load(std::filesystem::path const &path)
{
  std::ifstream in(path);
  if (!in)
    throw usage_error("cannot read config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (auto const hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    auto const eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path.string() + ":" + std::to_string(lineno) +
                         ": expected 'key = value', got '" + line + "'");
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void Settings::resolve()
{
  if (!support_radius_set_)
    run.grid.support_radius = run.grid.R / std::sqrt(2.0);
  run.kernel.validate();
  run.grid.validate();
  run.quad.validate();
  run.validate();
  degiorgi.energy.gamma = run.kernel.gamma;
  degiorgi.energy.s = run.kernel.s;
  verify.grid = run.grid;
  verify.quad = run.quad;
  for (auto const &c : cases)
  {
    auto const &ids = verify_case_ids();
    if (std::find(ids.begin(), ids.end(), c) == ids.end())
      throw usage_error("verify: unknown case '" + c + "'");
  }
}

std::vector<std::pair<std::string, std::string>> Settings::echo() const
{
  std::vector<std::pair<std::string, std::string>> out;
  for (auto const &e : entries_)
    out.push_back({e.key, e.get()});
  return out;
}

std::string Settings::echo_text() const
{
  std::string out;
  for (auto const &[k, v] : echo())
    out += k + " = " + v + "\n";
  return out;
}

} // namespace ncboltz::cli

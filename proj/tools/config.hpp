#pragma once

#include "ncboltz/dynamics.hpp"
#include "ncboltz/verify.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace ncboltz::cli
{
struct DegiorgiSettings
{
  double p = 1.1;
  double r_star = 3.0;
  double xi_star = 4.0;
  double C = 1.0;
  double E0 = 1.0;
  double K0 = 1.0e6;
  int k_max = 30;
  std::string checkpoints; // directory of ckpt_* files; empty skips the empirical ladder
  int ladder_k_max = 20;
  EnergySpec energy;
};

struct FitSettings
{
  std::string input; // diagnostics CSV
  std::string column = "L2_k1";
  std::string model = "exponential";
  double t_lo = 1.0;
  double t_hi = 8.0;
};

struct Settings
{
  RunConfig run;
  double init_amplitude = 0.02;
  double init_modulation = 0.0;
  double hypo_l = 14.0;
  VerifyOptions verify;
  std::vector<std::string> cases;
  DegiorgiSettings degiorgi;
  FitSettings fit;

  Settings();
  Settings(Settings const &) = delete;
  Settings &operator=(Settings const &) = delete;

  // Applies "key = value"; throws config_error naming an unknown key or a
  // malformed value.
  void set(std::string const &key, std::string const &value);
  // Reads a flat file of "key = value" lines; '#' starts a comment.
  void load(std::filesystem::path const &path);
  // Fills derived defaults and validates the result.
  void resolve();

  // Resolved configuration, one "key = value" per line in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
  std::string echo_text() const;

private:
  struct Entry
  {
    std::string key;
    std::function<void(std::string const &)> set;
    std::function<std::string()> get;
  };
  std::vector<Entry> entries_;
  bool support_radius_set_ = false;
  void bind();
};

std::string format_double(double x);

} // namespace ncboltz::cli

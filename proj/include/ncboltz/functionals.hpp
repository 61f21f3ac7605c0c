#pragma once

#include "ncboltz/grid.hpp"

#include <span>
#include <vector>

namespace ncboltz
{
enum class NormKind
{
  Lpq,  // (int |f|^p <v>^{pq})^{1/p}
  Hml,  // |<v>^l <D>^m f|_{L^2}
  LlogL // int |f| log(1 + |f|)
};

struct NormSpec
{
  NormKind kind = NormKind::Lpq;
  double p = 2.0;
  double q = 0.0;
  double m = 0.0;
  double l = 0.0;

  static NormSpec lpq(double p, double q) { return {NormKind::Lpq, p, q, 0.0, 0.0}; }
  static NormSpec hml(double m, double l) { return {NormKind::Hml, 2.0, 0.0, m, l}; }
  static NormSpec llogl() { return {NormKind::LlogL, 1.0, 0.0, 0.0, 0.0}; }

  void validate() const;
};

// Norms integrate over x as well, with measure dx h^3.
double norm(Field const &f, NormSpec const &spec);

// Sup over (x, v) of |f| <v>^k.
double weighted_sup(Field const &f, double k);

// Projection onto span{mu, v_i mu, |v|^2 mu} with the coefficients taken as
// integrals over x and v; the result does not depend on x.
Field project_P(Field const &f);

enum class LevelSign
{
  plus,
  minus
};

struct LevelSetSpec
{
  double K = 0.0;
  double l = 0.0;
  LevelSign sign = LevelSign::plus;

  void validate() const;
};

// plus: (f <v>^l - K) on {f <v>^l >= K}, else 0; minus: (f <v>^l - K) on
// {f <v>^l < K}, else 0.
Field level_set(Field const &f, LevelSetSpec const &spec);

struct EnergySpec
{
  double p = 1.5;
  double s_dd = 0.01; // s'' in (0, s/(2(s+3)))
  double C0 = 1.0;
  double l = 0.0;
  double gamma = 0.0;
  double s = 0.25;

  void validate() const;
};

struct Snapshot
{
  double t = 0.0;
  Field f;
};
using Trajectory = std::vector<Snapshot>;

struct EnergyTerms
{
  double sup_l2 = 0.0;      // sup_t |f^l_{K,+}|^2_{L^2_{x,v}}
  double dissipation = 0.0; // int int |<v>^{gamma/2} f^l_{K,+}|^2_{H^s_v} dx dt
  double fractional = 0.0;  // C0^{-1} (int |(1-Delta_x)^{s''/2}(<v>^{-2+gamma/2} f^l_{K,+})^2|^p_{L^p} dt)^{1/p}
  double total() const { return sup_l2 + dissipation + fractional; }
};

// Snapshots with t in [T1, T2] are used; they must be uniformly spaced and at
// least two. Time integrals use the trapezoid rule.
EnergyTerms energy_terms(std::span<Snapshot const> snapshots, double K, double T1, double T2,
                         EnergySpec const &spec);
double energy_functional(std::span<Snapshot const> snapshots, double K, double T1, double T2,
                         EnergySpec const &spec);

// Trapezoid rule on samples y(t_i).
double trapezoid(std::span<double const> t, std::span<double const> y);

} // namespace ncboltz

#pragma once

#include "ncboltz/vec3.hpp"

#include <numbers>

namespace ncboltz
{
// Collision-kernel parameters for B(v - v_*, sigma) = |v - v_*|^gamma b(cos theta).
//
// The angular profile is b(cos theta) = kappa * theta^{-1-2s} / sin(theta), which
// meets the non-cutoff lower/upper bound with equality. With eta > 0 it is
// replaced by the regularized profile
//   b_eta = b * theta^{2+2s} / (theta^{2+2s_*} (theta + eta)^{2s - 2s_*}).
// Angles below theta_min are dropped (the non-cutoff integrals are the
// theta_min -> 0 limit).
struct KernelSpec
{
  double gamma = 0.0;
  double s = 0.25;
  double eta = 0.0;
  double s_star = 0.5;
  double theta_min = 1.0e-3;
  double kappa = 1.0;

  // Throws config_error on a violated invariant.
  void validate() const;

  // b_eta(cos theta) * theta^{2+2s_*} >= alpha0 on (0, pi/2], independent of eta.
  double alpha0() const;
};

struct CollisionPair
{
  Vec3 v;
  Vec3 v_star;
  Vec3 sigma;
  Vec3 v_prime;
  Vec3 v_star_prime;
  double cos_theta = 1.0;
};

// b_eta(cos theta) for theta in (0, pi/2]; throws domain_error outside.
double angular_b(double theta, KernelSpec const &spec);

// |v - v_*|^gamma b_eta(cos theta), zero off the support 0 <= theta <= pi/2
// and below theta_min.
double kernel_B(Vec3 const &v, Vec3 const &v_star, Vec3 const &sigma, KernelSpec const &spec);

// Same kernel in (relative speed, deviation angle) form.
double kernel_B(double rel_speed, double theta, KernelSpec const &spec);

CollisionPair post_collision(Vec3 const &v, Vec3 const &v_star, Vec3 const &sigma);

// Convolution kernel S(|z|) of the cancellation identity, integrated
// adaptively over [theta_min, pi/2]. Throws numerical_failure when the
// error estimate exceeds the tolerance.
double cancellation_S(double z_mag, KernelSpec const &spec);

// 2 pi * integral of b_eta sin(theta) over [theta_min, pi/2]; this is the
// (truncated) angular mass entering the loss term.
double angular_mass(KernelSpec const &spec);

// gamma_0 = 1/2 int b(cos theta) sin^2(theta/2) d sigma over the truncated support.
double gamma0(KernelSpec const &spec);

inline constexpr double half_pi = std::numbers::pi / 2.0;

} // namespace ncboltz

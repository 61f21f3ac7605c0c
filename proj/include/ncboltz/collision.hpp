#pragma once

#include "ncboltz/grid.hpp"
#include "ncboltz/kernel.hpp"

#include <span>
#include <vector>

namespace ncboltz
{
enum class ThetaRule
{
  midpoint_graded, // midpoint rule on a geometric mesh refined toward theta_min
  uniform
};

// How off-grid values g(v_*'), f(v') are reconstructed inside q_apply.
enum class Interpolation
{
  trilinear,        // plain trilinear interpolation of the nodal values
  maxwellian_ratio  // trilinear interpolation of f / M, times the exact M(v')
};

struct QuadratureSpec
{
  int n_theta = 32;
  int n_phi = 16;
  ThetaRule rule = ThetaRule::midpoint_graded;
  Interpolation interpolation = Interpolation::maxwellian_ratio;

  void validate() const;
};

// Polar nodes on [theta_min, pi/2]; weight folds in b_eta(cos theta) sin(theta)
// d theta and the full azimuthal measure 2 pi (split evenly over n_phi nodes).
struct ThetaNode
{
  double theta = 0.0;
  double cos_t = 1.0;
  double sin_t = 0.0;
  double weight = 0.0;
};
std::vector<ThetaNode> theta_nodes(KernelSpec const &kernel, QuadratureSpec const &quad);

// Sum of the angular weights, i.e. the quadrature value of int b_eta d sigma.
double angular_weight_sum(KernelSpec const &kernel, QuadratureSpec const &quad);

struct CollisionResult
{
  Field gain;
  Field loss;
  Field total; // gain - loss
};

// Q(g, f)(v_i) = sum_j h^3 sum_sigma w B(v_i - v_j, sigma) [g(v_*') f(v') - g(v_j) f(v_i)]
// over support-ball nodes, with off-grid values by trilinear interpolation.
// Outputs vanish outside the support ball.
CollisionResult q_apply(Field const &g, Field const &f, KernelSpec const &kernel,
                        QuadratureSpec const &quad);

// Gain and loss at selected output nodes of one spatial cell. Entries of
// `outputs` are flat velocity indices inside the support ball.
struct PartialCollision
{
  std::vector<double> gain;
  std::vector<double> loss;
};
PartialCollision q_apply_at(Field const &g, Field const &f, int x_index,
                            std::span<std::size_t const> outputs, KernelSpec const &kernel,
                            QuadratureSpec const &quad);

// Loss part through a separate code path: f(v) (g * |.|^gamma)(v) times the
// discrete angular mass.
Field loss_reference(Field const &g, Field const &f, KernelSpec const &kernel,
                     QuadratureSpec const &quad);

// Largest loss frequency sum_j h^3 g_j |v - v_j|^gamma * angular mass over the
// support ball; drives the explicit step-size guidance.
double max_loss_frequency(Field const &g, KernelSpec const &kernel, QuadratureSpec const &quad);

// Integrals of q against 1, v, |v|^2.
Moments weak_moments(Field const &q_out);

enum class CorrectionWeight
{
  uniform,   // L^2(h^3) projection onto the complement of span{1, v, |v|^2}
  maxwellian // subtract the element of span{M, v M, |v|^2 M} with the same moments
};

// Removes the collision-invariant moments of q_out on the support ball, per
// spatial cell. Nodes outside the ball are left untouched. Both variants are
// idempotent projections with exactly vanishing moments; the uniform one is
// orthogonal in L^2(h^3), the Maxwellian one in L^2(h^3 / M) with
// M = exp(-|v|^2/2).
Field conservative_correction(Field const &q_out,
                              CorrectionWeight weight = CorrectionWeight::uniform);

} // namespace ncboltz

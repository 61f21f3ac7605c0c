#include "ncboltz/collision.hpp"

#include "ncboltz/errors.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ncboltz
{
void QuadratureSpec::validate() const
{
  std::ostringstream os;
  if (n_theta < 8)
    os << "quad.n_theta must be >= 8 (got " << n_theta << ")";
  else if (n_phi < 4)
    os << "quad.n_phi must be >= 4 (got " << n_phi << ")";
  else
    return;
  throw config_error(os.str());
}

std::vector<ThetaNode> theta_nodes(KernelSpec const &kernel, QuadratureSpec const &quad)
{
  kernel.validate();
  quad.validate();
  std::vector<double> edges(std::size_t(quad.n_theta) + 1);
  double const lo = kernel.theta_min;
  double const hi = half_pi;
  for (int k = 0; k <= quad.n_theta; ++k)
  {
    double const t = double(k) / quad.n_theta;
    edges[std::size_t(k)] = quad.rule == ThetaRule::midpoint_graded
                                ? lo * std::pow(hi / lo, t)
                                : lo + (hi - lo) * t;
  }
  edges.back() = hi;
  std::vector<ThetaNode> nodes(std::size_t(quad.n_theta));
  for (std::size_t k = 0; k < nodes.size(); ++k)
  {
    double const th = 0.5 * (edges[k] + edges[k + 1]);
    double const w = angular_b(th, kernel) * std::sin(th) * (edges[k + 1] - edges[k]) *
                     (2.0 * std::numbers::pi);
    if (!std::isfinite(w))
      throw numerical_failure("theta_nodes: non-finite quadrature weight");
    nodes[k] = {th, std::cos(th), std::sin(th), w};
  }
  return nodes;
}

double angular_weight_sum(KernelSpec const &kernel, QuadratureSpec const &quad)
{
  double acc = 0.0;
  for (auto const &n : theta_nodes(kernel, quad))
    acc += n.weight;
  return acc;
}

namespace
{
// Values of g and f on one spatial cell, interleaved in an (n+2)^3 array with a
// zero ghost layer so trilinear stencils anywhere in [-R, R]^3 need no
// branches. With `ratio` set the stored values are divided by exp(-|v|^2/2).
class PaddedPair
{
public:
  PaddedPair(Field const &g, Field const &f, int ix, bool ratio)
      : n_(f.grid().n_v), np_(n_ + 2), data_(2 * std::size_t(np_) * np_ * np_, 0.0)
  {
    GridSpec const &grid = f.grid();
    auto gc = g.cell(ix);
    auto fc = f.cell(ix);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        for (int k = 0; k < n_; ++k)
        {
          std::size_t const src = (std::size_t(i) * n_ + j) * n_ + k;
          std::size_t const dst = (std::size_t(i + 1) * np_ + (j + 1)) * np_ + (k + 1);
          double const scale = ratio ? std::exp(0.5 * norm2(grid.velocity(i, j, k))) : 1.0;
          data_[2 * dst] = gc[src] * scale;
          data_[2 * dst + 1] = fc[src] * scale;
        }
  }

  // Point given in padded index coordinates (node j sits at j + 1).
  void operator()(double ti, double tj, double tk, double &gv, double &fv) const
  {
    int const i = int(ti);
    int const j = int(tj);
    int const k = int(tk);
    double const a = ti - i;
    double const b = tj - j;
    double const c = tk - k;
    std::size_t const sk = 2;
    std::size_t const sj = 2 * std::size_t(np_);
    std::size_t const si = sj * np_;
    double const *p = data_.data() + i * si + j * sj + k * sk;
    double const w000 = (1 - a) * (1 - b) * (1 - c), w001 = (1 - a) * (1 - b) * c;
    double const w010 = (1 - a) * b * (1 - c), w011 = (1 - a) * b * c;
    double const w100 = a * (1 - b) * (1 - c), w101 = a * (1 - b) * c;
    double const w110 = a * b * (1 - c), w111 = a * b * c;
    double const *p00 = p, *p01 = p + sj, *p10 = p + si, *p11 = p + si + sj;
    gv = w000 * p00[0] + w001 * p00[2] + w010 * p01[0] + w011 * p01[2] + w100 * p10[0] +
         w101 * p10[2] + w110 * p11[0] + w111 * p11[2];
    fv = w000 * p00[1] + w001 * p00[3] + w010 * p01[1] + w011 * p01[3] + w100 * p10[1] +
         w101 * p10[3] + w110 * p11[1] + w111 * p11[3];
  }

private:
  int n_;
  int np_;
  std::vector<double> data_;
};

struct CellContext
{
  GridSpec const &grid;
  KernelSpec const &kernel;
  std::vector<ThetaNode> thetas;
  std::vector<double> cos_phi;
  std::vector<double> sin_phi;
  std::vector<std::size_t> support;
  double weight_sum = 0.0;
  bool ratio = true;

  CellContext(GridSpec const &g, KernelSpec const &k, QuadratureSpec const &q)
      : grid(g), kernel(k), thetas(theta_nodes(k, q)), support(g.support_nodes()),
        ratio(q.interpolation == Interpolation::maxwellian_ratio)
  {
    for (int m = 0; m < q.n_phi; ++m)
    {
      double const phi = (m + 0.5) * 2.0 * std::numbers::pi / q.n_phi;
      cos_phi.push_back(std::cos(phi));
      sin_phi.push_back(std::sin(phi));
    }
    for (auto &t : thetas)
    {
      t.weight /= q.n_phi;
      weight_sum += t.weight * q.n_phi;
    }
    if (support.size() < 2)
      throw config_error("q_apply: support ball contains fewer than two grid nodes");
  }

  double speed(double d) const { return kernel.gamma == 0.0 ? 1.0 : std::pow(d, kernel.gamma); }
};

// One unordered pair (v_a, v_b) of support nodes. The sigma nodes are laid out
// in a frame around k = (v_a - v_b)/|v_a - v_b|; the same post-collision points
// serve output b through sigma -> -sigma, which keeps the deviation angle.
// Returns the weighted angular sums sum w f(v') g(v_*') for both outputs.
struct PairSums
{
  double for_a = 0.0;
  double for_b = 0.0;
};

PairSums pair_gain(CellContext const &ctx, PaddedPair const &pad, Vec3 const &va, Vec3 const &vb)
{
  GridSpec const &grid = ctx.grid;
  double const inv_h = 1.0 / grid.h();
  // padded index coordinate of a velocity component w: (w + R)/h - 1/2 + 1
  double const shift = grid.R * inv_h + 0.5;
  Vec3 const u = va - vb;
  double const d = norm(u);
  Vec3 const k = (1.0 / d) * u;
  Vec3 e1, e2;
  complete_frame(k, e1, e2);
  double const half = 0.5 * d * inv_h;
  Vec3 const c = 0.5 * inv_h * (va + vb);
  double const cx = c.x + shift;
  double const cy = c.y + shift;
  double const cz = c.z + shift;
  std::size_t const n_phi = ctx.cos_phi.size();
  PairSums out;
  for (auto const &t : ctx.thetas)
  {
    double const ak = half * t.cos_t;
    double const as = half * t.sin_t;
    double const kx = ak * k.x, ky = ak * k.y, kz = ak * k.z;
    double const e1x = as * e1.x, e1y = as * e1.y, e1z = as * e1.z;
    double const e2x = as * e2.x, e2y = as * e2.y, e2z = as * e2.z;
    double shell_a = 0.0;
    double shell_b = 0.0;
    for (std::size_t m = 0; m < n_phi; ++m)
    {
      double const cp = ctx.cos_phi[m];
      double const sp = ctx.sin_phi[m];
      double const ox = kx + cp * e1x + sp * e2x;
      double const oy = ky + cp * e1y + sp * e2y;
      double const oz = kz + cp * e1z + sp * e2z;
      double gp, fp, gq, fq;
      pad(cx + ox, cy + oy, cz + oz, gp, fp);
      pad(cx - ox, cy - oy, cz - oz, gq, fq);
      shell_a += fp * gq;
      shell_b += fq * gp;
    }
    out.for_a += t.weight * shell_a;
    out.for_b += t.weight * shell_b;
  }
  double sp = ctx.speed(d);
  if (ctx.ratio)
    sp *= std::exp(-0.5 * (norm2(va) + norm2(vb)));
  out.for_a *= sp;
  out.for_b *= sp;
  return out;
}

// All support outputs of one cell.
void collide_cell(CellContext const &ctx, PaddedPair const &pad, std::span<double const> gcell,
                  std::span<double const> fcell, std::span<double> gain, std::span<double> loss)
{
  GridSpec const &grid = ctx.grid;
  std::size_t const m = ctx.support.size();
  std::vector<Vec3> vel(m);
  for (std::size_t a = 0; a < m; ++a)
    vel[a] = grid.velocity(ctx.support[a]);
  std::vector<double> g_acc(m, 0.0), l_acc(m, 0.0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
    {
      PairSums const ps = pair_gain(ctx, pad, vel[a], vel[b]);
      g_acc[a] += ps.for_a;
      g_acc[b] += ps.for_b;
      double const sp = ctx.speed(norm(vel[a] - vel[b]));
      l_acc[a] += sp * gcell[ctx.support[b]];
      l_acc[b] += sp * gcell[ctx.support[a]];
    }
  double const h3 = grid.cell_volume();
  for (std::size_t a = 0; a < m; ++a)
  {
    std::size_t const q = ctx.support[a];
    gain[q] = g_acc[a] * h3;
    loss[q] = l_acc[a] * ctx.weight_sum * fcell[q] * h3;
  }
}

// Single output node with the same pair conventions as collide_cell.
void collide_node(CellContext const &ctx, PaddedPair const &pad, std::span<double const> gcell,
                  std::span<double const> fcell, std::size_t out, double &gain, double &loss)
{
  GridSpec const &grid = ctx.grid;
  Vec3 const vo = grid.velocity(out);
  double g_acc = 0.0, l_acc = 0.0;
  for (std::size_t j : ctx.support)
  {
    if (j == out)
      continue;
    Vec3 const vj = grid.velocity(j);
    if (out < j)
      g_acc += pair_gain(ctx, pad, vo, vj).for_a;
    else
      g_acc += pair_gain(ctx, pad, vj, vo).for_b;
    l_acc += ctx.speed(norm(vo - vj)) * gcell[j];
  }
  double const h3 = grid.cell_volume();
  gain = g_acc * h3;
  loss = l_acc * ctx.weight_sum * fcell[out] * h3;
}

} // namespace

CollisionResult q_apply(Field const &g, Field const &f, KernelSpec const &kernel,
                        QuadratureSpec const &quad)
{
  require_same_grid(g, f, "q_apply");
  GridSpec const &grid = f.grid();
  CellContext const ctx(grid, kernel, quad);
  std::size_t const nv = grid.nodes_v();
  std::vector<double> gain(grid.size(), 0.0);
  std::vector<double> loss(grid.size(), 0.0);
  for (int ix = 0; ix < grid.n_x; ++ix)
  {
    PaddedPair const pad(g, f, ix, ctx.ratio);
    collide_cell(ctx, pad, g.cell(ix), f.cell(ix),
                 std::span<double>(gain).subspan(std::size_t(ix) * nv, nv),
                 std::span<double>(loss).subspan(std::size_t(ix) * nv, nv));
  }
  std::vector<double> total(grid.size());
  for (std::size_t q = 0; q < total.size(); ++q)
    total[q] = gain[q] - loss[q];
  return {Field(grid, std::move(gain)), Field(grid, std::move(loss)), Field(grid, std::move(total))};
}

PartialCollision q_apply_at(Field const &g, Field const &f, int x_index,
                            std::span<std::size_t const> outputs, KernelSpec const &kernel,
                            QuadratureSpec const &quad)
{
  require_same_grid(g, f, "q_apply_at");
  GridSpec const &grid = f.grid();
  if (x_index < 0 || x_index >= grid.n_x)
    throw usage_error("q_apply_at: spatial index out of range");
  CellContext const ctx(grid, kernel, quad);
  double const r2 = grid.support_radius * grid.support_radius;
  PaddedPair const pad(g, f, x_index, ctx.ratio);
  PartialCollision res;
  for (std::size_t out : outputs)
  {
    if (out >= grid.nodes_v() || norm2(grid.velocity(out)) > r2)
      throw usage_error("q_apply_at: output node outside the support ball");
    double ga = 0.0, lo = 0.0;
    collide_node(ctx, pad, g.cell(x_index), f.cell(x_index), out, ga, lo);
    res.gain.push_back(ga);
    res.loss.push_back(lo);
  }
  return res;
}

Field loss_reference(Field const &g, Field const &f, KernelSpec const &kernel,
                     QuadratureSpec const &quad)
{
  require_same_grid(g, f, "loss_reference");
  GridSpec const &grid = f.grid();
  double const mass = angular_weight_sum(kernel, quad);
  std::vector<std::size_t> const ball = grid.support_nodes();
  std::size_t const nv = grid.nodes_v();
  std::vector<double> out(grid.size(), 0.0);
  for (int ix = 0; ix < grid.n_x; ++ix)
    for (std::size_t a : ball)
    {
      double conv = 0.0;
      for (std::size_t b : ball)
      {
        if (a == b)
          continue;
        double const d = norm(grid.velocity(a) - grid.velocity(b));
        conv += g[std::size_t(ix) * nv + b] * std::pow(d, kernel.gamma);
      }
      out[std::size_t(ix) * nv + a] = f[std::size_t(ix) * nv + a] * conv * grid.cell_volume() * mass;
    }
  return Field(grid, std::move(out));
}

double max_loss_frequency(Field const &g, KernelSpec const &kernel, QuadratureSpec const &quad)
{
  GridSpec const &grid = g.grid();
  Field const ones(grid, std::vector<double>(grid.size(), 1.0));
  Field const loss = loss_reference(g, ones, kernel, quad);
  return loss.max_abs();
}

Moments weak_moments(Field const &q_out) { return moments(q_out); }

namespace
{
Field maxwellian_correction(Field const &q_out)
{
  GridSpec const &grid = q_out.grid();
  std::vector<std::size_t> const ball = grid.support_nodes();
  std::size_t const m = ball.size();
  std::vector<std::array<double, 5>> phi(m);
  std::vector<double> weight(m);
  Eigen::Matrix<double, 5, 5> gram = Eigen::Matrix<double, 5, 5>::Zero();
  for (std::size_t a = 0; a < m; ++a)
  {
    Vec3 const v = grid.velocity(ball[a]);
    phi[a] = {1.0, v.x, v.y, v.z, norm2(v)};
    weight[a] = std::exp(-0.5 * norm2(v));
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c)
        gram(r, c) += phi[a][r] * phi[a][c] * weight[a];
  }
  Eigen::LDLT<Eigen::Matrix<double, 5, 5>> const ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-12 * gram.norm()))
    throw config_error("conservative_correction: collision invariants are degenerate on the support ball");

  std::vector<double> out(q_out.data());
  std::size_t const nv = grid.nodes_v();
  for (int ix = 0; ix < grid.n_x; ++ix)
    for (int pass = 0; pass < 2; ++pass)
    {
      Eigen::Matrix<double, 5, 1> mom = Eigen::Matrix<double, 5, 1>::Zero();
      for (std::size_t a = 0; a < m; ++a)
        for (int r = 0; r < 5; ++r)
          mom(r) += phi[a][r] * out[std::size_t(ix) * nv + ball[a]];
      Eigen::Matrix<double, 5, 1> const c = ldlt.solve(mom);
      for (std::size_t a = 0; a < m; ++a)
      {
        double corr = 0.0;
        for (int r = 0; r < 5; ++r)
          corr += c(r) * phi[a][r];
        out[std::size_t(ix) * nv + ball[a]] -= corr * weight[a];
      }
    }
  return Field(grid, std::move(out));
}

} // namespace

Field conservative_correction(Field const &q_out, CorrectionWeight weight)
{
  if (weight == CorrectionWeight::maxwellian)
    return maxwellian_correction(q_out);

  GridSpec const &grid = q_out.grid();
  std::vector<std::size_t> const ball = grid.support_nodes();
  std::size_t const m = ball.size();
  double const h3 = grid.cell_volume();

  // Orthonormal basis of span{1, v1, v2, v3, |v|^2} on the ball, by modified
  // Gram-Schmidt applied twice.
  std::array<std::vector<double>, 5> basis;
  for (auto &b : basis)
    b.resize(m);
  for (std::size_t a = 0; a < m; ++a)
  {
    Vec3 const v = grid.velocity(ball[a]);
    basis[0][a] = 1.0;
    basis[1][a] = v.x;
    basis[2][a] = v.y;
    basis[3][a] = v.z;
    basis[4][a] = norm2(v);
  }
  auto inner = [&](std::vector<double> const &x, std::vector<double> const &y) {
    double acc = 0.0;
    for (std::size_t a = 0; a < m; ++a)
      acc += x[a] * y[a];
    return acc * h3;
  };
  for (std::size_t p = 0; p < basis.size(); ++p)
  {
    double const original = std::sqrt(inner(basis[p], basis[p]));
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t r = 0; r < p; ++r)
      {
        double const c = inner(basis[p], basis[r]);
        for (std::size_t a = 0; a < m; ++a)
          basis[p][a] -= c * basis[r][a];
      }
    double const nrm = std::sqrt(inner(basis[p], basis[p]));
    if (!(nrm > 1e-10 * original))
      throw config_error("conservative_correction: collision invariants are degenerate on the support ball");
    for (auto &x : basis[p])
      x /= nrm;
  }

  std::vector<double> out(q_out.data());
  std::size_t const nv = grid.nodes_v();
  std::vector<double> local(m);
  for (int ix = 0; ix < grid.n_x; ++ix)
  {
    for (std::size_t a = 0; a < m; ++a)
      local[a] = out[std::size_t(ix) * nv + ball[a]];
    for (int pass = 0; pass < 2; ++pass)
      for (auto const &b : basis)
      {
        double const c = inner(local, b);
        for (std::size_t a = 0; a < m; ++a)
          local[a] -= c * b[a];
      }
    for (std::size_t a = 0; a < m; ++a)
      out[std::size_t(ix) * nv + ball[a]] = local[a];
  }
  return Field(grid, std::move(out));
}

} // namespace ncboltz

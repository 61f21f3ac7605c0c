#pragma once

#include "ncboltz/grid.hpp"

#include <random>
#include <vector>

namespace test_support
{
inline ncboltz::GridSpec small_grid(int n_v = 8, int n_x = 1)
{
  ncboltz::GridSpec g;
  g.n_v = n_v;
  g.n_x = n_x;
  return g;
}

inline ncboltz::Field random_field(ncboltz::GridSpec const &g, std::mt19937_64 &rng,
                                   double scale = 1.0)
{
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(g.size());
  for (auto &x : v)
    x = nd(rng);
  return ncboltz::Field(g, std::move(v));
}

// Random field restricted to the support ball.
inline ncboltz::Field random_ball_field(ncboltz::GridSpec const &g, std::mt19937_64 &rng,
                                        double scale = 1.0)
{
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> v(g.size(), 0.0);
  auto const ball = g.support_nodes();
  for (int ix = 0; ix < g.n_x; ++ix)
    for (std::size_t q : ball)
      v[std::size_t(ix) * g.nodes_v() + q] = nd(rng);
  return ncboltz::Field(g, std::move(v));
}

inline double max_abs_diff(ncboltz::Field const &a, ncboltz::Field const &b)
{
  return (a - b).max_abs();
}

} // namespace test_support

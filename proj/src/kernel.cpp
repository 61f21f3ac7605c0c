#include "ncboltz/kernel.hpp"

#include "ncboltz/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ncboltz
{
namespace
{
std::string describe(char const *what, double value)
{
  std::ostringstream os;
  os << what << " (got " << value << ")";
  return os.str();
}

// Integrates g(theta) over [theta_min, pi/2] in the variable u = log(theta),
// which flattens the theta^{-1-2s} concentration near theta_min.
template<typename Fn>
double integrate_log_theta(Fn &&g, double theta_min, double rel_tol, char const *what)
{
  using boost::math::quadrature::gauss_kronrod;
  double const u0 = std::log(theta_min);
  double const u1 = std::log(half_pi);
  auto integrand = [&](double u) {
    double const theta = std::exp(u);
    return g(theta) * theta;
  };
  double err = 0.0;
  double l1 = 0.0;
  double const value =
      gauss_kronrod<double, 31>::integrate(integrand, u0, u1, 15, rel_tol, &err, &l1);
  if (!std::isfinite(value) || err > 1.0e3 * rel_tol * std::max(l1, 1e-300))
  {
    std::ostringstream os;
    os << what << ": quadrature did not converge (estimate " << value << ", error " << err
       << ")";
    throw numerical_failure(os.str());
  }
  return value;
}

} // namespace

void KernelSpec::validate() const
{
  if (!(gamma > -3.0 && gamma <= 0.0))
    throw config_error(describe("kernel.gamma must lie in (-3, 0]", gamma));
  if (!(s > 0.0 && s < 1.0))
    throw config_error(describe("kernel.s must lie in (0, 1)", s));
  if (!(gamma + 2.0 * s > -1.0))
    throw config_error(describe("kernel requires gamma + 2s > -1", gamma + 2.0 * s));
  if (!(eta >= 0.0 && eta <= 1.0))
    throw config_error(describe("kernel.eta must lie in [0, 1]", eta));
  if (!(s_star > 0.0 && s_star <= 0.5))
    throw config_error(describe("kernel.s_star must lie in (0, 1/2]", s_star));
  if (eta > 0.0)
  {
    if (!(2.0 * s - 2.0 * s_star < 1.0))
      throw config_error(describe("regularized kernel requires 2s - 2s_* < 1", 2.0 * s - 2.0 * s_star));
    // b_eta <= b needs a nonnegative exponent 2s - 2s_*.
    if (s_star > s)
      throw config_error(describe("regularized kernel requires s_star <= s", s_star));
  }
  if (!(theta_min > 0.0 && theta_min < half_pi))
    throw config_error(describe("kernel.theta_min must lie in (0, pi/2)", theta_min));
  if (!(kappa > 0.0 && std::isfinite(kappa)))
    throw config_error(describe("kernel.kappa must be positive", kappa));
}

double KernelSpec::alpha0() const
{
  double const expo = eta > 0.0 ? 2.0 * s - 2.0 * s_star : 0.0;
  return kappa / std::pow(std::numbers::pi + 1.0, expo);
}

double angular_b(double theta, KernelSpec const &spec)
{
  if (!(theta > 0.0 && theta <= half_pi))
    throw domain_error(describe("angular_b: theta outside the support (0, pi/2]", theta));
  double const base = spec.kappa * std::pow(theta, -1.0 - 2.0 * spec.s) / std::sin(theta);
  if (spec.eta == 0.0)
    return base;
  double const expo = 2.0 * spec.s - 2.0 * spec.s_star;
  return base * std::pow(theta, 2.0 + 2.0 * spec.s) /
         (std::pow(theta, 2.0 + 2.0 * spec.s_star) * std::pow(theta + spec.eta, expo));
}

double kernel_B(double rel_speed, double theta, KernelSpec const &spec)
{
  if (!(theta >= spec.theta_min && theta <= half_pi))
    return 0.0;
  double const speed = spec.gamma == 0.0 ? 1.0 : std::pow(rel_speed, spec.gamma);
  return speed * angular_b(theta, spec);
}

double kernel_B(Vec3 const &v, Vec3 const &v_star, Vec3 const &sigma, KernelSpec const &spec)
{
  Vec3 const u = v - v_star;
  double const d = norm(u);
  if (d == 0.0)
  {
    if (spec.gamma < 0.0)
      throw domain_error("kernel_B: v == v_star with gamma < 0 (singular relative speed)");
    return 0.0;
  }
  double const c = dot(u, sigma) / d;
  if (c < 0.0)
    return 0.0;
  double const theta = std::acos(std::min(c, 1.0));
  return kernel_B(d, theta, spec);
}

CollisionPair post_collision(Vec3 const &v, Vec3 const &v_star, Vec3 const &sigma)
{
  if (std::abs(norm(sigma) - 1.0) > 1e-12)
    throw usage_error(describe("post_collision: sigma must be a unit vector, |sigma|", norm(sigma)));
  CollisionPair out;
  out.v = v;
  out.v_star = v_star;
  out.sigma = sigma;
  Vec3 const center = 0.5 * (v + v_star);
  Vec3 const u = v - v_star;
  double const d = norm(u);
  Vec3 const half = (0.5 * d) * sigma;
  out.v_prime = center + half;
  out.v_star_prime = center - half;
  out.cos_theta = d > 0.0 ? dot(u, sigma) / d : 1.0;
  return out;
}

double cancellation_S(double z_mag, KernelSpec const &spec)
{
  if (!(z_mag > 0.0))
    throw domain_error(describe("cancellation_S: |z| must be positive", z_mag));
  auto g = [&](double theta) {
    double const ch = std::cos(0.5 * theta);
    double const gain = kernel_B(z_mag / ch, theta, spec) / (ch * ch * ch);
    double const loss = kernel_B(z_mag, theta, spec);
    return std::sin(theta) * (gain - loss);
  };
  return 2.0 * std::numbers::pi * integrate_log_theta(g, spec.theta_min, 1e-12, "cancellation_S");
}

double angular_mass(KernelSpec const &spec)
{
  auto g = [&](double theta) { return std::sin(theta) * angular_b(theta, spec); };
  return 2.0 * std::numbers::pi * integrate_log_theta(g, spec.theta_min, 1e-12, "angular_mass");
}

double gamma0(KernelSpec const &spec)
{
  auto g = [&](double theta) {
    double const sh = std::sin(0.5 * theta);
    return std::sin(theta) * angular_b(theta, spec) * sh * sh;
  };
  return std::numbers::pi * integrate_log_theta(g, spec.theta_min, 1e-12, "gamma0");
}

} // namespace ncboltz

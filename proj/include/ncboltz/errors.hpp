#pragma once

#include <stdexcept>
#include <string>

namespace ncboltz
{
// Bad call: mismatched grids, wrong preconditions, unknown case names.
class usage_error : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// A configuration value (kernel exponents, grid sizes, ladder constants) that
// violates a model invariant.
class config_error : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation outside the mathematical domain, e.g. v == v_* with gamma < 0.
class domain_error : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

// Quadrature did not converge, an iterative solve stalled, or a NaN appeared.
class numerical_failure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace ncboltz

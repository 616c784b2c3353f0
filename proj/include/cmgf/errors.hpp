#pragma once
#include <stdexcept>
#include <string>

namespace cmgf {

// Quadrature gave up before reaching the requested tolerance. Carries the
// partial value so callers can decide whether it is still usable.
struct ConvergenceError : std::runtime_error {
  double partial_value;
  double err_estimate;
  ConvergenceError(const std::string& msg, double partial, double err)
      : std::runtime_error(msg), partial_value(partial), err_estimate(err) {}
};

// The integrand produced a NaN/Inf; t is the offending abscissa.
struct IntegrandError : std::runtime_error {
  double t;
  IntegrandError(const std::string& msg, double t_bad)
      : std::runtime_error(msg), t(t_bad) {}
};

}  // namespace cmgf

#pragma once
#include <cmath>
#include <complex>
#include <stdexcept>

namespace cmgf {

using cplx = std::complex<double>;

// Principal-branch power z^w = exp(w log z), Arg in (-pi, pi].
inline cplx complex_power(cplx z, cplx w) {
  if (z == cplx(0.0, 0.0)) throw std::domain_error("complex_power: z = 0");
  return std::exp(w * std::log(z));
}

namespace detail {

// Lanczos approximation, g = 7, 9 terms. Good to ~1e-13 relative on the
// right half plane; reflection handles Re z < 0.5.
inline cplx lanczos_gamma(cplx z) {
  static const double c[9] = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  if (z.real() < 0.5) {
    // Gamma(z) Gamma(1-z) = pi / sin(pi z)
    return M_PI / (std::sin(M_PI * z) * lanczos_gamma(1.0 - z));
  }
  z -= 1.0;
  cplx x = c[0];
  for (int i = 1; i < 9; ++i) x += c[i] / (z + cplx(double(i), 0.0));
  cplx t = z + 7.5;
  return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

inline bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

}  // namespace detail

inline double gamma_fn(double r) {
  if (detail::is_nonpositive_integer(r))
    throw std::domain_error("gamma_fn: pole at non-positive integer");
  return std::tgamma(r);
}

inline cplx gamma_fn(cplx r) {
  if (r.imag() == 0.0) {
    if (detail::is_nonpositive_integer(r.real()))
      throw std::domain_error("gamma_fn: pole at non-positive integer");
    return cplx(std::tgamma(r.real()), 0.0);
  }
  return detail::lanczos_gamma(r);
}

}  // namespace cmgf

#pragma once
#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "complex_utils.hpp"
#include "model.hpp"
#include "models.hpp"
#include "quadrature.hpp"

namespace cmgf {

struct MomentSpec {
  double r = 1.0;                    // moment order
  double xi = 0.0;                   // shift: moments of X - xi
  std::optional<double> contour_s{}; // override of the contour abscissa
  QuadConfig quad{};
};

struct MomentSummary {
  double mean, stdev, skew, kurt;
};

// Moment value plus the quadrature's propagated error estimate (same scale
// as the value; not a rigorous bound).
struct MomentResult {
  double value = 0.0;
  double err_estimate = 0.0;
};

enum class TailSide { above, below };

struct CrossMoments {
  double e_x1x2;    // E[X1 X2]
  double e_x1x2sq;  // E[X1 X2^2]
};

// Contour real part: min(1, s_max/2), shrunk further for operations that
// also evaluate M(-z).  The moment value is s-invariant; this is just a
// numerically comfortable default away from the strip edge.
inline double default_abscissa(const MgfModel& m) {
  return std::min(1.0, 0.5 * m.strip.s_max);
}

namespace detail {

// Which of the two mirrored terms e^{-xi z}M(z) and e^{+xi z}M(-z) the
// integrand carries, and the sign on the mirrored one.
struct ContourTerms {
  bool plus = true;
  bool minus = false;
  double minus_coeff = 1.0;
};

inline double resolve_abscissa(const MgfModel& m,
                               const std::optional<double>& override_s,
                               bool need_plus, bool need_minus) {
  if (override_s) {
    const double s = *override_s;
    if (!(s > 0.0))
      throw std::domain_error("contour abscissa must be positive");
    if ((need_plus && !m.strip.contains(s)) ||
        (need_minus && !m.strip.contains(-s)))
      throw std::domain_error(m.descriptor + ": abscissa " +
                              std::to_string(s) + " infeasible for this strip");
    return s;
  }
  double s = 1.0;
  if (need_plus) s = std::min(s, 0.5 * m.strip.s_max);
  if (need_minus && std::isfinite(m.strip.s_min))
    s = std::min(s, -0.5 * m.strip.s_min);
  if (!(s > 0.0)) throw std::domain_error(m.descriptor + ": empty abscissa range");
  return s;
}

// The tail-stop parameter for the half-line driver: fast-decay models use
// the consecutive-small-octave rule (hint 0); otherwise the integrand
// envelope is t^-(r+1+decay) and we need its exponent positive to certify
// truncation.
inline double halfline_hint(const MgfModel& m, double r,
                            const QuadConfig& quad) {
  if (quad.tail_exponent_hint > 0.0) return quad.tail_exponent_hint;
  if (m.fast_decay) return 0.0;
  const double h = r + m.algebraic_decay;
  if (!(h > 0.0))
    throw std::domain_error(
        m.descriptor +
        ": cannot certify tail truncation for order r = " + std::to_string(r) +
        " (algebraic MGF decay too slow); raise r or supply a decaying model");
  return h;
}

// Core worker: integral over t in [0, inf) of Re[ num(z) / z^(r+1) ] with
// z = s + it, where num is the term combination selected by `terms`.
// Continuous models go through the doubling-octave driver.  Lattice models
// (MGF periodic along the contour) go through the period-sum driver; a
// declared point mass at the shift point makes the integrand's
// non-oscillatory part explicit, so it is removed analytically first (its
// own integral contributes nothing for r > 0) and the remainder converges
// one extrapolation order faster.
inline QuadResult contour_integral(const MgfModel& m, double r, double xi,
                                   double s, const ContourTerms& terms,
                                   const QuadConfig& quad) {
  const double rp1 = r + 1.0;
  double atom_sub = 0.0;
  if (m.has_atom_at(xi)) {
    if (!(r > 0.0))
      throw std::domain_error(
          m.descriptor + ": point mass at the shift point requires order > 0");
    atom_sub = m.atom_mass * ((terms.plus ? 1.0 : 0.0) +
                              (terms.minus ? terms.minus_coeff : 0.0));
  }
  auto integrand = [&](double t) {
    const cplx z(s, t);
    cplx num(0.0, 0.0);
    if (terms.plus) num += std::exp(-xi * z) * m.evaluate(z);
    if (terms.minus)
      num += terms.minus_coeff * std::exp(xi * z) * m.evaluate(-z);
    num -= atom_sub;
    return std::real(num / complex_power(z, rp1));
  };

  if (m.lattice > 0.0) {
    const double ratio = xi / m.lattice;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      throw std::domain_error(
          m.descriptor + ": shift point must lie on the support lattice");
    double decay_p;
    if (m.has_atom_at(xi)) {
      decay_p = rp1;  // non-oscillatory part removed above
    } else {
      // A lattice point of unknown mass may sit at xi; its truncation series
      // starts one order lower.
      decay_p = r;
      if (!(decay_p > 0.0))
        throw std::domain_error(m.descriptor +
                                ": order too low for lattice extrapolation "
                                "without a declared mass at the shift point");
    }
    const double period = 2.0 * M_PI / m.lattice;
    return integrate_lattice(integrand, period, decay_p, quad);
  }

  QuadConfig qc = quad;
  qc.tail_exponent_hint = halfline_hint(m, r, quad);
  return integrate_half_line(integrand, qc);
}

// Full-line variant for complex orders; returns the unscaled contour
// integral of num(z) / z^(r+1) over the whole line.
inline cplx contour_integral_full(const MgfModel& m, cplx r, double xi,
                                  double s, const ContourTerms& terms,
                                  const QuadConfig& quad) {
  if (m.lattice > 0.0)
    throw std::domain_error(m.descriptor +
                            ": complex orders are not supported for "
                            "lattice-supported models");
  const cplx rp1 = r + 1.0;
  QuadConfig qc = quad;
  qc.tail_exponent_hint = halfline_hint(m, r.real(), quad);
  auto f = [&](double t) {
    const cplx z(s, t);
    cplx num(0.0, 0.0);
    if (terms.plus) num += std::exp(-xi * z) * m.evaluate(z);
    if (terms.minus)
      num += terms.minus_coeff * std::exp(xi * z) * m.evaluate(-z);
    return num / complex_power(z, rp1);
  };
  return integrate_full_line(f, qc);
}

}  // namespace detail

// E|X - xi|^r for real r > -1 (r > 0 if the model has mass at xi).
inline MomentResult absolute_moment_result(const MgfModel& m,
                                           const MomentSpec& spec) {
  if (!(spec.r > -1.0))
    throw std::domain_error("absolute_moment: Re(r) > -1 required");
  const double s =
      detail::resolve_abscissa(m, spec.contour_s, true, true);
  const detail::ContourTerms terms{true, true, +1.0};
  const QuadResult qr =
      detail::contour_integral(m, spec.r, spec.xi, s, terms, spec.quad);
  const double scale = gamma_fn(spec.r + 1.0) / M_PI;
  return {scale * qr.value, std::abs(scale) * qr.err_estimate};
}

inline double absolute_moment(const MgfModel& m, const MomentSpec& spec) {
  return absolute_moment_result(m, spec).value;
}

// Complex-order variant; uses the full-line contour since the two half
// lines no longer combine into a single real part.
inline cplx absolute_moment(const MgfModel& m, cplx r, double xi = 0.0,
                            std::optional<double> contour_s = {},
                            const QuadConfig& quad = {}) {
  if (!(r.real() > -1.0))
    throw std::domain_error("absolute_moment: Re(r) > -1 required");
  const double s = detail::resolve_abscissa(m, contour_s, true, true);
  const detail::ContourTerms terms{true, true, +1.0};
  const cplx integral = detail::contour_integral_full(m, r, xi, s, terms, quad);
  return gamma_fn(r + 1.0) / (2.0 * M_PI) * integral;
}

// E[(X - xi)^r] for a model with Pr(X >= xi) = 1.
inline MomentResult nonneg_moment_result(const MgfModel& m,
                                         const MomentSpec& spec) {
  if (!m.nonneg)
    throw std::domain_error(m.descriptor +
                            ": nonneg_moment requires a model declared "
                            "non-negative");
  if (spec.xi > 1e-12)
    throw std::domain_error(
        "nonneg_moment: shift must keep Pr(X >= xi) = 1 (xi <= 0 here)");
  if (!(spec.r > -1.0))
    throw std::domain_error("nonneg_moment: Re(r) > -1 required");
  const double s =
      detail::resolve_abscissa(m, spec.contour_s, true, false);
  const detail::ContourTerms terms{true, false, 0.0};
  const QuadResult qr =
      detail::contour_integral(m, spec.r, spec.xi, s, terms, spec.quad);
  const double scale = gamma_fn(spec.r + 1.0) / M_PI;
  return {scale * qr.value, std::abs(scale) * qr.err_estimate};
}

inline double nonneg_moment(const MgfModel& m, const MomentSpec& spec) {
  return nonneg_moment_result(m, spec).value;
}

inline cplx nonneg_moment(const MgfModel& m, cplx r, double xi = 0.0,
                          std::optional<double> contour_s = {},
                          const QuadConfig& quad = {}) {
  if (!m.nonneg)
    throw std::domain_error(m.descriptor +
                            ": nonneg_moment requires a model declared "
                            "non-negative");
  if (xi > 1e-12)
    throw std::domain_error("nonneg_moment: need xi <= 0");
  if (!(r.real() > -1.0))
    throw std::domain_error("nonneg_moment: Re(r) > -1 required");
  const double s = detail::resolve_abscissa(m, contour_s, true, false);
  const detail::ContourTerms terms{true, false, 0.0};
  const cplx integral = detail::contour_integral_full(m, r, xi, s, terms, quad);
  return gamma_fn(r + 1.0) / (2.0 * M_PI) * integral;
}

// E[(X - xi)^k] for integer k >= 1, from the signed two-term contour form.
inline MomentResult integer_moment_result(const MgfModel& m, int k,
                                          double xi = 0.0,
                                          const QuadConfig& quad = {},
                                          std::optional<double> contour_s = {}) {
  if (k < 1) throw std::domain_error("integer_moment: need k >= 1");
  const double s = detail::resolve_abscissa(m, contour_s, true, true);
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  const detail::ContourTerms terms{true, true, sign};
  const QuadResult qr =
      detail::contour_integral(m, (double)k, xi, s, terms, quad);
  const double scale = gamma_fn((double)k + 1.0) / M_PI;
  return {scale * qr.value, scale * qr.err_estimate};
}

inline double integer_moment(const MgfModel& m, int k, double xi = 0.0,
                             const QuadConfig& quad = {},
                             std::optional<double> contour_s = {}) {
  return integer_moment_result(m, k, xi, quad, contour_s).value;
}

// E[(X - xi)^k 1{X > xi}] (above) or E[(X - xi)^k 1{X < xi}] (below),
// for odd k.  Each side needs only one of the mirrored terms, so only the
// corresponding half of the strip constrains the abscissa.
inline MomentResult tail_moment_result(const MgfModel& m, int k, double xi,
                                       TailSide side,
                                       const QuadConfig& quad = {},
                                       std::optional<double> contour_s = {}) {
  if (k < 1 || k % 2 == 0)
    throw std::domain_error("tail_moment: need odd k >= 1");
  const double scale = gamma_fn((double)k + 1.0) / M_PI;
  if (side == TailSide::above) {
    const double s = detail::resolve_abscissa(m, contour_s, true, false);
    const detail::ContourTerms terms{true, false, 0.0};
    const QuadResult qr =
        detail::contour_integral(m, (double)k, xi, s, terms, quad);
    return {scale * qr.value, scale * qr.err_estimate};
  }
  const double s = detail::resolve_abscissa(m, contour_s, false, true);
  const detail::ContourTerms terms{false, true, +1.0};
  const QuadResult qr =
      detail::contour_integral(m, (double)k, xi, s, terms, quad);
  return {-scale * qr.value, scale * qr.err_estimate};
}

inline double tail_moment(const MgfModel& m, int k, double xi, TailSide side,
                          const QuadConfig& quad = {},
                          std::optional<double> contour_s = {}) {
  return tail_moment_result(m, k, xi, side, quad, contour_s).value;
}

// Distribution function by inversion along the imaginary axis:
// F(x) = 1/2 - (1/pi) * int_0^inf Re[M(it) e^{-itx} / (it)] dt.
// clamped (optional) reports whether a sub-tolerance overshoot of [0,1]
// was pulled back; an overshoot above tolerance raises instead.
inline double cdf(const MgfModel& m, double x, const QuadConfig& quad = {},
                  bool* clamped = nullptr) {
  if (!m.continuous)
    throw std::domain_error(m.descriptor +
                            ": cdf requires a continuous model");
  auto integrand = [&](double t) {
    const cplx w = m.evaluate(cplx(0.0, t)) * std::exp(cplx(0.0, -t * x));
    return std::imag(w) / t;  // Re[w / (it)]
  };
  QuadConfig qc = quad;
  if (qc.tail_exponent_hint <= 0.0 && !m.fast_decay) {
    if (!(m.algebraic_decay > 0.0))
      throw std::domain_error(m.descriptor +
                              ": cdf needs a declared contour decay rate");
    qc.tail_exponent_hint = m.algebraic_decay;
  }
  const QuadResult qr = integrate_half_line(integrand, qc);
  double f = 0.5 - qr.value / M_PI;
  const double slack = 10.0 * (quad.abs_tol + qr.err_estimate);
  if (clamped) *clamped = false;
  if (f < 0.0 || f > 1.0) {
    if (f < -slack || f > 1.0 + slack)
      throw std::runtime_error(m.descriptor +
                               ": cdf overshoots [0,1] beyond tolerance");
    f = std::clamp(f, 0.0, 1.0);
    if (clamped) *clamped = true;
  }
  return f;
}

// alpha-quantile by moment-based bracketing and bisection.  CDF evaluations
// dominate the cost, so the loop is plain derivative-free bisection down to
// a 1e-12 interval, finished with one linear-interpolation polish.
inline double quantile(const MgfModel& m, double alpha,
                       const QuadConfig& quad = {}) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("quantile: need alpha in (0,1)");
  const double mean = integer_moment(m, 1, 0.0, quad);
  const double ex2 = integer_moment(m, 2, 0.0, quad);
  const double var = ex2 - mean * mean;
  if (!(var > 0.0))
    throw std::runtime_error(m.descriptor + ": degenerate variance in quantile bracket");
  const double sd = std::sqrt(var);
  double lo = mean - 20.0 * sd, hi = mean + 20.0 * sd;
  double flo = cdf(m, lo, quad), fhi = cdf(m, hi, quad);
  for (int grow = 0; (flo > alpha || fhi < alpha) && grow < 6; ++grow) {
    const double w = hi - lo;
    if (flo > alpha) { lo -= w; flo = cdf(m, lo, quad); }
    if (fhi < alpha) { hi += w; fhi = cdf(m, hi, quad); }
  }
  if (flo > alpha || fhi < alpha)
    throw std::runtime_error(m.descriptor + ": quantile bracket failure");
  while (hi - lo > 1e-12 * std::max(1.0, std::abs(lo) + std::abs(hi))) {
    const double mid = 0.5 * (lo + hi);
    const double fm = cdf(m, mid, quad);
    if (fm < alpha) { lo = mid; flo = fm; }
    else            { hi = mid; fhi = fm; }
  }
  if (fhi > flo)  // linear polish inside the final bracket
    return lo + (alpha - flo) * (hi - lo) / (fhi - flo);
  return 0.5 * (lo + hi);
}

// ES_alpha(X) = -(1/alpha) E[(X - q_alpha) 1{X < q_alpha}] - q_alpha.
inline double expected_shortfall(const MgfModel& m, double alpha,
                                 const QuadConfig& quad = {}) {
  const double q = quantile(m, alpha, quad);
  const double below = tail_moment(m, 1, q, TailSide::below, quad);
  return -below / alpha - q;
}

// Mean / stdev / skewness / kurtosis from the first four raw moments.
inline MomentSummary moment_summary(const MgfModel& m,
                                    const QuadConfig& quad = {}) {
  const double m1 = integer_moment(m, 1, 0.0, quad);
  const double m2 = integer_moment(m, 2, 0.0, quad);
  const double m3 = integer_moment(m, 3, 0.0, quad);
  const double m4 = integer_moment(m, 4, 0.0, quad);
  const double var = m2 - m1 * m1;
  if (!(var > 0.0))
    throw std::runtime_error(m.descriptor + ": non-positive variance in moment_summary");
  const double sd = std::sqrt(var);
  const double skew = (m3 - m1 * m1 * m1) / (sd * sd * sd) - 3.0 * m1 / sd;
  const double kurt = (m4 - m1 * m1 * m1 * m1) / (var * var) -
                      4.0 * (m1 / sd) * skew - 6.0 * m1 * m1 / var;
  return {m1, sd, skew, kurt};
}

// Cross moments of a bivariate MGF via polarization of univariate slices:
// E[X1 X2]   = ( E[(X1+X2)^2] - E[X1^2] - E[X2^2] ) / 2
// E[X1 X2^2] = ( E[(X1-X2)^3] + E[(X1+X2)^3] - 2 E[X1^3] ) / 6
inline CrossMoments cross_moments(const BivariateSlices& sl,
                                  const QuadConfig& quad = {}) {
  const double sum2 = integer_moment(sl.sum, 2, 0.0, quad);
  const double m1_2 = integer_moment(sl.marginal1, 2, 0.0, quad);
  const double m2_2 = integer_moment(sl.marginal2, 2, 0.0, quad);
  const double diff3 = integer_moment(sl.difference, 3, 0.0, quad);
  const double sum3 = integer_moment(sl.sum, 3, 0.0, quad);
  const double m1_3 = integer_moment(sl.marginal1, 3, 0.0, quad);
  return {0.5 * (sum2 - m1_2 - m2_2),
          (diff3 + sum3 - 2.0 * m1_3) / 6.0};
}

// 1 / Gamma(r/2 + 1) from the contour representation with M replaced by the
// standard normal MGF restricted to s = 1; a self-contained correctness
// anchor because the target has a closed form.
inline double reciprocal_gamma(double r, const QuadConfig& quad = {}) {
  if (!(r > -1.0)) throw std::domain_error("reciprocal_gamma: need r > -1");
  const cplx rp1(r + 1.0, 0.0);
  auto f = [&](double t) {
    const cplx z(1.0, t);
    return std::exp(0.5 * z * z) / complex_power(z, rp1);
  };
  const cplx integral = integrate_full_line(f, quad);
  return std::exp2(0.5 * r) / M_PI * integral.real();
}

}  // namespace cmgf

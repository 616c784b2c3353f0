#pragma once
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "model.hpp"
#include "moments.hpp"

namespace cmgf {

// ---------------------------------------------------------------------------
// Parameter / state bundles.  Hard violations throw from validate(); soft
// ones (explosive persistence) come back as warnings so callers can decide.
// ---------------------------------------------------------------------------

struct HngParams {
  double omega = 0.0;      // variance intercept
  double beta = 0.0;       // variance persistence on h_t
  double alpha = 0.0;      // news impact
  double gamma = 0.0;      // leverage
  double lambda_rp = 0.0;  // equity risk premium
  double r_f = 0.0;        // risk-free rate per period

  double persistence() const { return beta + alpha * gamma * gamma; }
  void validate() const {
    if (alpha < 0.0) throw std::invalid_argument("HngParams: alpha must be >= 0");
    if (omega < 0.0) throw std::invalid_argument("HngParams: omega must be >= 0");
    if (beta < 0.0) throw std::invalid_argument("HngParams: beta must be >= 0");
  }
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (persistence() >= 1.0)
      w.push_back("hng: variance persistence beta + alpha*gamma^2 = " +
                  std::to_string(persistence()) + " >= 1 (non-stationary)");
    return w;
  }
};

struct HngState {
  double h_next = 0.0;  // h_{T+1}, the already-known next-period variance
  int horizon = 1;
  void validate() const {
    if (!(h_next > 0.0)) throw std::invalid_argument("HngState: h_next must be > 0");
    if (horizon < 1) throw std::invalid_argument("HngState: horizon must be >= 1");
  }
};

inline double hng_unconditional_variance(const HngParams& p) {
  return (p.omega + p.alpha) / (1.0 - p.persistence());
}

inline constexpr int kHargLags = 22;

struct HargParams {
  double beta_d = 0.0;  // daily lag weight
  double beta_w = 0.0;  // weekly (lags 2..5, spread evenly)
  double beta_m = 0.0;  // monthly (lags 6..22, spread evenly)
  double eta = 0.0;     // gamma scale
  double delta = 0.0;   // gamma shape

  // Per-lag weights, scale folded in: the recursion consumes eta*beta_j.
  std::array<double, kHargLags> phi() const {
    std::array<double, kHargLags> f{};
    f[0] = eta * beta_d;
    for (int j = 1; j < 5; ++j) f[j] = eta * beta_w / 4.0;
    for (int j = 5; j < kHargLags; ++j) f[j] = eta * beta_m / 17.0;
    return f;
  }
  double persistence() const { return eta * (beta_d + beta_w + beta_m); }
  void validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("HargParams: eta must be > 0");
    if (!(delta > 0.0)) throw std::invalid_argument("HargParams: delta must be > 0");
    if (beta_d < 0.0 || beta_w < 0.0 || beta_m < 0.0)
      throw std::invalid_argument("HargParams: lag weights must be >= 0");
  }
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (persistence() >= 1.0)
      w.push_back("harg: persistence eta*(beta_d+beta_w+beta_m) = " +
                  std::to_string(persistence()) + " >= 1 (non-stationary)");
    return w;
  }
};

struct HargState {
  // lags[0] = X_T, lags[1] = X_{T-1}, ..., lags[21] = X_{T-21}
  std::array<double, kHargLags> lags{};
  int horizon = 1;
  void validate() const {
    for (double x : lags)
      if (x < 0.0) throw std::invalid_argument("HargState: lags must be >= 0");
    if (horizon < 1) throw std::invalid_argument("HargState: horizon must be >= 1");
  }
};

inline double harg_unconditional_mean(const HargParams& p) {
  return p.eta * p.delta / (1.0 - p.persistence());
}

struct ArpParams {
  double omega = 0.0;  // intensity intercept
  double beta = 0.0;   // intensity persistence
  double alpha = 0.0;  // feedback from realized counts

  double stationary_mean() const { return omega / (1.0 - beta - alpha); }
  void validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("ArpParams: omega must be > 0");
    if (beta < 0.0 || alpha < 0.0)
      throw std::invalid_argument("ArpParams: beta, alpha must be >= 0");
  }
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (beta + alpha >= 1.0)
      w.push_back("arp: persistence beta + alpha = " +
                  std::to_string(beta + alpha) + " >= 1 (non-stationary)");
    return w;
  }
};

struct ArpState {
  double lambda_next = 0.0;  // lambda_{T+1}
  int horizon = 1;
  void validate() const {
    if (!(lambda_next > 0.0))
      throw std::invalid_argument("ArpState: lambda_next must be > 0");
    if (horizon < 1) throw std::invalid_argument("ArpState: horizon must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Affine recursions.  Each returns the log-MGF coefficients; branch and
// overflow conditions are enforced where a log or exp actually consumes
// them, naming the horizon step that failed.
// ---------------------------------------------------------------------------

namespace detail {

struct HngCoeffs {
  cplx a, b;
};

inline HngCoeffs hng_coeffs(const HngParams& p, int H, cplx z) {
  const cplx zl = z * (p.lambda_rp - 0.5);
  cplx a = z * p.r_f;
  cplx b = zl + 0.5 * z * z;
  for (int h = 1; h < H; ++h) {
    const cplx w = 1.0 - 2.0 * p.alpha * b;
    if (!(w.real() > 0.0))
      throw std::domain_error(
          "hng: recursion leaves the log domain at horizon step " +
          std::to_string(h) + "; reduce |Re z|");
    a += z * p.r_f + b * p.omega - 0.5 * std::log(w);
    const cplx u = z - 2.0 * p.alpha * p.gamma * b;
    b = zl + b * (p.beta + p.alpha * p.gamma * p.gamma) + u * u / (2.0 * w);
  }
  return {a, b};
}

struct HargCoeffs {
  cplx a;
  std::vector<cplx> b;
};

// General-lag-order core; the public model fixes p = 22.  phi are the
// per-lag weights with the scale already folded in (eta * beta_j).
inline HargCoeffs harg_coeffs(const std::vector<double>& phi, double eta,
                              double delta, int H, cplx z) {
  const int p = (int)phi.size();
  const cplx w0 = 1.0 - eta * z;
  if (!(w0.real() > 0.0))
    throw std::domain_error("harg: 1 - eta z leaves the log domain; reduce Re z");
  HargCoeffs c;
  c.a = -delta * std::log(w0);
  c.b.resize(p);
  for (int j = 0; j < p; ++j) c.b[j] = z / w0 * phi[j];
  for (int h = 1; h < H; ++h) {
    const cplx w = 1.0 - eta * c.b[0];
    if (!(w.real() > 0.0))
      throw std::domain_error(
          "harg: recursion leaves the log domain at horizon step " +
          std::to_string(h) + "; reduce |Re z|");
    c.a -= delta * std::log(w);
    const cplx lead = c.b[0] / w;
    std::vector<cplx> nb(p);
    for (int j = 0; j < p; ++j)
      nb[j] = lead * phi[j] + (j + 1 < p ? c.b[j + 1] : cplx(0.0));
    c.b.swap(nb);
  }
  return c;
}

struct ArpCoeffs {
  cplx a, b;
};

inline ArpCoeffs arp_coeffs(const ArpParams& p, int H, cplx z) {
  const cplx zh = z / (double)H;
  if (zh.real() > 700.0)
    throw std::domain_error("arp: exp overflow in recursion; reduce Re z");
  cplx a = 0.0;
  cplx b = std::exp(zh) - 1.0;
  for (int h = 1; h < H; ++h) {
    a += p.omega * b;
    const cplx e = zh + p.alpha * b;
    if (e.real() > 700.0)
      throw std::domain_error(
          "arp: exp overflow in recursion at horizon step " +
          std::to_string(h) + "; reduce Re z");
    b = p.beta * b + (std::exp(e) - 1.0);
  }
  return {a, b};
}

// Guarded exp of a log-MGF exponent: +overflow is an error (silently
// returning inf would poison quadrature); deep underflow is an exact 0.
inline cplx guarded_mgf_exp(cplx e, const char* who) {
  if (e.real() > 700.0)
    throw std::domain_error(std::string(who) +
                            ": MGF exponent overflow; reduce contour abscissa");
  return std::exp(e);
}

// Bisect for the largest feasible |s| on each side of 0, capped at 2, then
// shrink by a 10% safety margin.  `ok` must be monotone-ish in |s|; the
// runtime guards in the recursions stay authoritative regardless.
template <class Feasible>
Strip probe_strip(Feasible&& ok, const char* who) {
  auto largest = [&](double sign) {
    if (ok(sign * 2.0)) return 2.0;
    double lo = 1e-8, hi = 2.0;
    if (!ok(sign * lo)) return 0.0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ok(sign * mid) ? lo : hi) = mid;
    }
    return lo;
  };
  const double sp = largest(+1.0);
  const double sm = largest(-1.0);
  if (sp <= 1e-8 || sm <= 1e-8)
    throw std::domain_error(std::string(who) +
                            ": degenerate strip, no feasible contour abscissa");
  return Strip(-0.9 * sm, 0.9 * sp);
}

// Imaginary offsets probed alongside each candidate abscissa: the branch
// conditions involve Re of recursion values, which t can push around even
// when the real axis is fine.
inline constexpr double probe_t_grid[14] = {0.5, 1, 2, 4, 8, 16, 32,
                                            64, 128, 256, 512, 1024, 2048, 4096};

}  // namespace detail

// ---------------------------------------------------------------------------
// Contour feasibility probes (cached implicitly: run once per model build).
// ---------------------------------------------------------------------------

inline Strip hng_probe(const HngParams& p, int H, double h_next = 1.0) {
  p.validate();
  auto ok = [&](double s) {
    try {
      auto check = [&](cplx z) {
        const auto c = detail::hng_coeffs(p, H, z);
        if (!((1.0 - 2.0 * p.alpha * c.b).real() > 0.0))
          throw std::domain_error("hng: final-step condition");
        if ((c.a + c.b * h_next).real() > 700.0)
          throw std::domain_error("hng: overflow");
      };
      check(cplx(s, 0.0));
      for (double t : detail::probe_t_grid) check(cplx(s, t));
      return true;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  return detail::probe_strip(ok, "hng_probe");
}

inline Strip harg_probe(const HargParams& p, int H,
                        const std::array<double, kHargLags>* lags = nullptr) {
  p.validate();
  const auto f = p.phi();
  const std::vector<double> phi(f.begin(), f.end());
  auto ok = [&](double s) {
    try {
      auto check = [&](cplx z) {
        const auto c = detail::harg_coeffs(phi, p.eta, p.delta, H, z);
        if (!((1.0 - p.eta * c.b[0]).real() > 0.0))
          throw std::domain_error("harg: final-step condition");
        if (lags) {
          cplx e = c.a;
          for (int j = 0; j < kHargLags; ++j) e += c.b[j] * (*lags)[j];
          if (e.real() > 700.0) throw std::domain_error("harg: overflow");
        }
      };
      check(cplx(s, 0.0));
      for (double t : detail::probe_t_grid) check(cplx(s, t));
      return true;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  return detail::probe_strip(ok, "harg_probe");
}

inline Strip arp_probe(const ArpParams& p, int H, double lambda_next) {
  p.validate();
  auto ok = [&](double s) {
    try {
      auto check = [&](cplx z) {
        const auto c = detail::arp_coeffs(p, H, z);
        if ((c.a + c.b * lambda_next).real() > 700.0)
          throw std::domain_error("arp: overflow");
      };
      check(cplx(s, 0.0));
      for (double t : detail::probe_t_grid) check(cplx(s, t));
      return true;
    } catch (const std::domain_error&) {
      return false;
    }
  };
  return detail::probe_strip(ok, "arp_probe");
}

// ---------------------------------------------------------------------------
// Model builders.
// ---------------------------------------------------------------------------

// Conditional MGF of the H-period aggregate return.  |M| along the contour
// decays like t^-(H-1) through the accumulated log terms (Gaussian-fast for
// H = 1 or alpha = 0), so the tail hint carries H - 1.
inline MgfModel hng_mgf(const HngParams& p, const HngState& st) {
  p.validate();
  st.validate();
  MgfModel m;
  m.strip = hng_probe(p, st.horizon, st.h_next);
  m.evaluate_fn = [p, st](cplx z) {
    const auto c = detail::hng_coeffs(p, st.horizon, z);
    return detail::guarded_mgf_exp(c.a + c.b * st.h_next, "hng");
  };
  m.descriptor = "hng(H=" + std::to_string(st.horizon) + ")";
  if (st.horizon == 1 || p.alpha == 0.0)
    m.fast_decay = true;
  else
    m.algebraic_decay = (double)(st.horizon - 1);
  return m;
}

// Conditional MGF of realized variance aggregated over H periods.  Only the
// outermost log term grows along the contour, so |M| ~ t^-delta.
inline MgfModel harg_mgf(const HargParams& p, const HargState& st) {
  p.validate();
  st.validate();
  const auto f = p.phi();
  const std::vector<double> phi(f.begin(), f.end());
  MgfModel m;
  m.strip = harg_probe(p, st.horizon, &st.lags);
  m.evaluate_fn = [p, st, phi](cplx z) {
    const auto c = detail::harg_coeffs(phi, p.eta, p.delta, st.horizon, z);
    cplx e = c.a;
    for (int j = 0; j < kHargLags; ++j) e += c.b[j] * st.lags[j];
    return detail::guarded_mgf_exp(e, "harg");
  };
  m.descriptor = "harg(H=" + std::to_string(st.horizon) + ")";
  m.nonneg = true;
  m.algebraic_decay = p.delta;
  return m;
}

// Conditional MGF of the average count over H periods; support is the
// lattice {0, 1/H, 2/H, ...} with the declared mass at zero obtained from
// the recursion itself far in the left tail.
inline MgfModel arp_mgf(const ArpParams& p, const ArpState& st) {
  p.validate();
  st.validate();
  MgfModel m;
  m.strip = arp_probe(p, st.horizon, st.lambda_next);
  m.evaluate_fn = [p, st](cplx z) {
    const auto c = detail::arp_coeffs(p, st.horizon, z);
    return detail::guarded_mgf_exp(c.a + c.b * st.lambda_next, "arp");
  };
  m.descriptor = "arp(H=" + std::to_string(st.horizon) + ")";
  m.continuous = false;
  m.nonneg = true;
  m.lattice = 1.0 / (double)st.horizon;
  m.atom_x = 0.0;
  {  // Pr(all counts zero) = lim_{z->-inf} M(z), converged by z = -40H
    const auto c = detail::arp_coeffs(p, st.horizon, cplx(-40.0 * st.horizon, 0.0));
    m.atom_mass = std::real(detail::guarded_mgf_exp(c.a + c.b * st.lambda_next, "arp"));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Term structures of conditional moments.
// ---------------------------------------------------------------------------

struct TermStructureCell {
  double r;
  int horizon;
  double value = 0.0;
  double err_estimate = 0.0;
  bool ok = false;
  std::string error;
};

struct TermStructure {
  std::vector<TermStructureCell> cells;
};

namespace detail {

inline MomentResult moment_auto(const MgfModel& m, double r,
                                const QuadConfig& quad) {
  const double rr = std::round(r);
  const bool is_int = std::abs(r - rr) < 1e-9 && rr >= 1.0;
  if (m.nonneg) {
    MomentSpec sp;
    sp.r = r;
    sp.quad = quad;
    return nonneg_moment_result(m, sp);
  }
  if (is_int) return integer_moment_result(m, (int)rr, 0.0, quad);
  MomentSpec sp;
  sp.r = r;
  sp.quad = quad;
  return absolute_moment_result(m, sp);
}

template <class MakeModel>
TermStructure term_structure_impl(MakeModel&& make_model,
                                  const std::vector<double>& orders,
                                  const std::vector<int>& horizons,
                                  const QuadConfig& quad) {
  TermStructure ts;
  for (int H : horizons) {
    bool model_ok = true;
    std::string model_err;
    MgfModel model;
    try {
      model = make_model(H);
    } catch (const std::exception& e) {
      model_ok = false;
      model_err = e.what();
    }
    for (double r : orders) {
      TermStructureCell c;
      c.r = r;
      c.horizon = H;
      if (!model_ok) {
        c.error = model_err;
      } else {
        try {
          const MomentResult mr = moment_auto(model, r, quad);
          c.value = mr.value;
          c.err_estimate = mr.err_estimate;
          c.ok = true;
        } catch (const std::exception& e) {
          c.error = e.what();
        }
      }
      ts.cells.push_back(c);
    }
  }
  return ts;
}

}  // namespace detail

// One model build per horizon, reused across orders; per-cell failures are
// collected, not fatal.
inline TermStructure term_structure(const HngParams& p, const HngState& st,
                                    const std::vector<double>& orders,
                                    const std::vector<int>& horizons,
                                    const QuadConfig& quad = {}) {
  return detail::term_structure_impl(
      [&](int H) {
        HngState s = st;
        s.horizon = H;
        return hng_mgf(p, s);
      },
      orders, horizons, quad);
}

inline TermStructure term_structure(const HargParams& p, const HargState& st,
                                    const std::vector<double>& orders,
                                    const std::vector<int>& horizons,
                                    const QuadConfig& quad = {}) {
  return detail::term_structure_impl(
      [&](int H) {
        HargState s = st;
        s.horizon = H;
        return harg_mgf(p, s);
      },
      orders, horizons, quad);
}

inline TermStructure term_structure(const ArpParams& p, const ArpState& st,
                                    const std::vector<double>& orders,
                                    const std::vector<int>& horizons,
                                    const QuadConfig& quad = {}) {
  return detail::term_structure_impl(
      [&](int H) {
        ArpState s = st;
        s.horizon = H;
        return arp_mgf(p, s);
      },
      orders, horizons, quad);
}

}  // namespace cmgf

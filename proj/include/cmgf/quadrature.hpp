#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "complex_utils.hpp"
#include "errors.hpp"

namespace cmgf {

enum class PanelRule { gk15 };

struct QuadConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  long max_panels = 1L << 20;   // total GK15 panels for one integral
  PanelRule panel_rule = PanelRule::gk15;
  double tail_exponent_hint = 0.0;  // h > 0: integrand envelope ~ t^-(1+h); 0 = unset
  int max_octaves = 128;        // half-line truncation cap: T = 2^(max_octaves-1)
};

struct QuadResult {
  double value = 0.0;
  double err_estimate = 0.0;
  long panels_used = 0;
  double truncation_point = 0.0;
};

namespace detail {

// 15-point Kronrod / 7-point Gauss pair, nodes and weights on [-1, 1].
inline constexpr double gk15_xgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
inline constexpr double gk15_wgk[8] = {
    0.2293532201052922e-1, 0.6309209262997855e-1, 0.1047900103222502,
    0.1406532597155259,    0.1690047266392679,    0.1903505780647854,
    0.2044329400752989,    0.2094821410847278};
inline constexpr double gk15_wg[4] = {0.1294849661688697, 0.2797053914892767,
                                      0.3818300505051189, 0.4179591836734694};

struct Panel {
  double value;
  double err;
  double resabs;
};

template <class F>
Panel gk15(F&& f, double a, double b) {
  auto eval = [&](double t) {
    const double v = f(t);
    if (!std::isfinite(v))
      throw IntegrandError("integrand not finite at t = " + std::to_string(t),
                           t);
    return v;
  };
  const double centre = 0.5 * (a + b);
  const double hlgth = 0.5 * (b - a);
  const double fc = eval(centre);
  double resg = gk15_wg[3] * fc;
  double resk = gk15_wgk[7] * fc;
  double resabs = std::abs(resk);
  double fv[15];
  for (int j = 0; j < 7; ++j) {
    const double dx = hlgth * gk15_xgk[j];
    fv[j] = eval(centre - dx);
    fv[14 - j] = eval(centre + dx);
  }
  for (int j = 0; j < 3; ++j) {  // Gauss nodes sit at the odd Kronrod indices
    const int k = 2 * j + 1;
    resg += gk15_wg[j] * (fv[k] + fv[14 - k]);
  }
  for (int j = 0; j < 7; ++j) {
    resk += gk15_wgk[j] * (fv[j] + fv[14 - j]);
    resabs += gk15_wgk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
  }
  const double reskh = 0.5 * resk;
  double resasc = gk15_wgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j)
    resasc += gk15_wgk[j] *
              (std::abs(fv[j] - reskh) + std::abs(fv[14 - j] - reskh));
  resasc *= std::abs(hlgth);
  resabs *= std::abs(hlgth);
  double err = std::abs((resk - resg) * hlgth);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
  if (round > err) err = round;
  return {resk * hlgth, err, resabs};
}

// Globally adaptive bisection on [a, b] to absolute tolerance tol.  panels is
// a shared budget across one whole integral, not just this interval.
template <class F>
Panel adaptive(F&& f, double a, double b, double tol, long max_panels,
               long& panels) {
  struct Item {
    double a, b, tol;
  };
  std::vector<Item> stack{{a, b, tol}};
  double value = 0.0, err = 0.0, resabs = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    if (++panels > max_panels)
      throw ConvergenceError(
          "adaptive quadrature: panel budget exhausted on [" +
              std::to_string(a) + ", " + std::to_string(b) + "]",
          value, err + tol);
    Panel p = gk15(f, it.a, it.b);
    const double width = it.b - it.a;
    if (p.err <= it.tol || p.err <= 50.0 * eps * p.resabs ||
        width <= 16.0 * eps * (std::abs(it.a) + std::abs(it.b)) ||
        width < 1e-290) {
      value += p.value;
      err += p.err;
      resabs += p.resabs;
    } else {
      const double mid = 0.5 * (it.a + it.b);
      stack.push_back({it.a, mid, 0.5 * it.tol});
      stack.push_back({mid, it.b, 0.5 * it.tol});
    }
  }
  return {value, err, resabs};
}

// Dense linear solve (partial pivoting), small n only.  a is row-major n*n,
// rhs is overwritten with the solution.
inline void solve_dense(std::vector<double>& a, std::vector<double>& rhs,
                        int n) {
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == 0.0)
      throw std::runtime_error("solve_dense: singular system");
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(rhs[col], rhs[piv]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double m = a[r * n + col] / a[col * n + col];
      if (m == 0.0) continue;
      for (int c = col; c < n; ++c) a[r * n + c] -= m * a[col * n + c];
      rhs[r] -= m * rhs[col];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    double s = rhs[r];
    for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * rhs[c];
    rhs[r] = s / a[r * n + r];
  }
}

}  // namespace detail

// Integrate f over [0, inf) by summing geometrically doubling octaves
// [0,1], [1,2], [2,4], ...  Each octave gets an adaptive GK15 pass with a
// per-octave tolerance summing to a fraction of the overall budget, so the
// far tail costs only log(T) panels when the integrand is smooth out there.
//
// Termination: with tail_exponent_hint h > 0 the integrand envelope is
// ~ t^-(1+h), octave sums shrink by ~2^-h per doubling, and the remainder
// past octave k is bounded by |I_k| / (2^h - 1); stop when both the octave
// and that bound are negligible.  Without a hint, stop after two consecutive
// negligible octaves (one alone can be an oscillation accident) — only
// appropriate when the integrand decays faster than any power.
template <class F>
QuadResult integrate_half_line(F&& f, const QuadConfig& cfg) {
  QuadResult res;
  const bool envelope_mode = cfg.tail_exponent_hint > 0.0;
  double lo = 0.0, hi = 1.0;
  int consecutive_small = 0;
  for (int k = 0; k < cfg.max_octaves; ++k) {
    const double eff_tol =
        std::max(cfg.abs_tol, cfg.rel_tol * std::abs(res.value));
    const double panel_tol = eff_tol / (8.0 * (k + 1.0) * (k + 2.0));
    detail::Panel p = detail::adaptive(f, lo, hi, panel_tol, cfg.max_panels,
                                       res.panels_used);
    res.value += p.value;
    res.err_estimate += p.err;
    res.truncation_point = hi;
    const double octave_mag = std::abs(p.value);
    const double gate = eff_tol / 4.0;
    if (k >= 2) {
      if (envelope_mode) {
        const double tail_bound =
            octave_mag / (std::exp2(cfg.tail_exponent_hint) - 1.0);
        if (octave_mag < gate && tail_bound < gate) {
          res.err_estimate += tail_bound;
          return res;
        }
      } else {
        consecutive_small = (octave_mag < gate) ? consecutive_small + 1 : 0;
        if (consecutive_small >= 2) {
          res.err_estimate += 2.0 * octave_mag;
          return res;
        }
      }
    }
    lo = hi;
    hi *= 2.0;
  }
  throw ConvergenceError(
      "integrate_half_line: no convergence by t = " +
          std::to_string(res.truncation_point),
      res.value, res.err_estimate);
}

// Integral of a complex-valued integrand over the whole line, by reflection
// onto [0, inf).  Needed only for complex moment orders, where the two sides
// do not combine into a single real part.
template <class F>
cplx integrate_full_line(F&& f, const QuadConfig& cfg) {
  auto half = [&cfg](auto&& g) {
    QuadResult re = integrate_half_line(
        [&](double t) { return std::real(g(t)); }, cfg);
    QuadResult im = integrate_half_line(
        [&](double t) { return std::imag(g(t)); }, cfg);
    return cplx(re.value, im.value);
  };
  const cplx pos = half([&](double t) { return f(t); });
  const cplx neg = half([&](double t) { return f(-t); });
  return pos + neg;
}

// Integrate an eventually-periodic oscillatory integrand over [0, inf):
// f has period `period` up to a smooth algebraic envelope, and the partial
// sums over M whole periods obey  S_M = S_inf - sum_k c_k M^-(decay_p + k).
// Whole-period truncation makes that expansion smooth in M, so a small
// dense solve extrapolates M -> inf.  Used for lattice-supported
// distributions, where the MGF restricted to a vertical line is periodic.
template <class F>
QuadResult integrate_lattice(F&& f, double period, double decay_p,
                             const QuadConfig& cfg) {
  if (!(period > 0.0))
    throw std::invalid_argument("integrate_lattice: period must be > 0");
  if (!(decay_p > 0.0))
    throw std::invalid_argument(
        "integrate_lattice: decay exponent must be > 0");
  // Choose the period-count ladder so the total integration length stays a
  // few thousand units; for long periods the expansion is asymptotic from
  // M = 1 already.
  int m_max = 256;
  while (m_max > 8 && m_max * period > 6000.0) m_max /= 2;
  std::vector<int> ms;
  for (int m = std::max(1, m_max / 32); m <= m_max; m *= 2) ms.push_back(m);

  QuadResult res;
  res.truncation_point = m_max * period;
  const double period_tol = cfg.abs_tol / (16.0 * m_max);

  std::vector<double> s_rows;  // S_M for each M in ms
  double acc = 0.0, acc_err = 0.0;
  size_t next_row = 0;
  for (int j = 0; j < m_max && next_row < ms.size(); ++j) {
    detail::Panel p = detail::adaptive(f, j * period, (j + 1) * period,
                                       period_tol, cfg.max_panels,
                                       res.panels_used);
    acc += p.value;
    acc_err += p.err;
    if (j + 1 == ms[next_row]) {
      s_rows.push_back(acc);
      ++next_row;
      // If successive rows already agree far below tolerance, extrapolation
      // past this point cannot matter; stop integrating periods.
      if (s_rows.size() >= 4 &&
          std::abs(s_rows.back() - s_rows[s_rows.size() - 2]) <
              cfg.abs_tol / 100.0) {
        res.truncation_point = (j + 1) * period;
        break;
      }
    }
  }
  ms.resize(s_rows.size());

  auto extrapolate = [&](size_t first_row) {
    const int n = (int)(s_rows.size() - first_row);
    if (n == 1) return s_rows.back();
    std::vector<double> a(n * n), rhs(n);
    for (int i = 0; i < n; ++i) {
      const double m = ms[first_row + i];
      a[i * n + 0] = 1.0;
      for (int k = 1; k < n; ++k)
        a[i * n + k] = -std::pow(m, -(decay_p + (k - 1)));
      rhs[i] = s_rows[first_row + i];
    }
    detail::solve_dense(a, rhs, n);
    return rhs[0];
  };
  const double full = extrapolate(0);
  const double dropped = extrapolate(1);
  res.value = full;
  res.err_estimate = acc_err + std::abs(full - dropped);
  return res;
}

}  // namespace cmgf

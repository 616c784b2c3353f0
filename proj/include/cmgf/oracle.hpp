#pragma once

// Monte-Carlo oracle layer: independent simulators for every model plus a
// density-integration baseline for NIG.  Everything here is deliberately
// decoupled from the contour machinery so that agreement between the two
// paths is meaningful evidence, not a tautology.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmgf/dynamic.hpp"
#include "cmgf/models.hpp"
#include "cmgf/quadrature.hpp"

namespace cmgf {

// ---------------------------------------------------------------------------
// RNG: PCG32 (XSH-RR).  Small state, solid statistics, and cheap to reseed,
// which is what makes the per-path substream scheme below viable: path i of a
// run always draws from Pcg32(seed, i), so results are independent of batch
// size and of how paths are distributed over threads.
// ---------------------------------------------------------------------------
class Pcg32 {
public:
  Pcg32(std::uint64_t seed, std::uint64_t stream = 0) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  std::uint32_t next_u32() {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ull + inc_;
    const std::uint32_t xorshifted =
        static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31u));
  }

  // 53-bit uniform in [0, 1)
  double next_double() {
    const std::uint64_t hi = next_u32() >> 5;
    const std::uint64_t lo = next_u32() >> 6;
    return (static_cast<double>(hi) * 67108864.0 + static_cast<double>(lo)) *
           (1.0 / 9007199254740992.0);
  }

  // uniform in (0, 1], safe to feed into log()
  double next_open() { return 1.0 - next_double(); }

  // standard normal via Box-Muller, caching the second deviate
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_open();
    const double u2 = next_double();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Elementary samplers
// ---------------------------------------------------------------------------

// Knuth's product method.  exp(-mean) underflows past ~745, so large means
// are split into chunks of at most 25 (a sum of independent Poissons is
// Poisson); the chunk size keeps the expected uniform count modest.
inline long draw_poisson(Pcg32 &rng, double mean) {
  if (!(mean >= 0.0))
    throw std::domain_error("draw_poisson: mean must be non-negative");
  long total = 0;
  while (mean > 25.0) {
    const double limit = std::exp(-25.0);
    long k = 0;
    double prod = 1.0;
    do {
      ++k;
      prod *= rng.next_open();
    } while (prod > limit);
    total += k - 1;
    mean -= 25.0;
  }
  const double limit = std::exp(-mean);
  long k = 0;
  double prod = 1.0;
  do {
    ++k;
    prod *= rng.next_open();
  } while (prod > limit);
  return total + k - 1;
}

// Marsaglia-Tsang squeeze for shape >= 1, with the usual U^{1/a} boost for
// shape < 1.  Unit scale; callers multiply.
inline double draw_gamma(Pcg32 &rng, double shape) {
  if (!(shape > 0.0))
    throw std::domain_error("draw_gamma: shape must be positive");
  if (shape < 1.0) {
    const double u = rng.next_open();
    return draw_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_open();
    if (u < 1.0 - 0.0331 * (x * x) * (x * x))
      return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

// Michael-Schucany-Haas transform: one normal, one uniform, two candidate
// roots, no rejection loop.
inline double draw_inverse_gaussian(Pcg32 &rng, double mean, double shape) {
  if (!(mean > 0.0) || !(shape > 0.0))
    throw std::domain_error("draw_inverse_gaussian: mean/shape must be positive");
  const double nu = rng.next_normal();
  const double y = nu * nu;
  double x = mean + mean * mean * y / (2.0 * shape) -
             mean / (2.0 * shape) *
                 std::sqrt(4.0 * mean * shape * y + mean * mean * y * y);
  if (x <= 0.0)
    x = std::numeric_limits<double>::min(); // roundoff guard for huge y
  if (rng.next_double() <= mean / (mean + x))
    return x;
  return mean * mean / x;
}

// ---------------------------------------------------------------------------
// NIG sampling via the mean-variance mixture: V ~ IG(delta/gamma, delta^2),
// X = loc + asym*V + sqrt(V)*Z.
// ---------------------------------------------------------------------------
inline std::vector<double> sample_nig(const NigParams &p, std::size_t n,
                                      std::uint64_t seed) {
  p.validate();
  const double g = p.gamma_aux();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    Pcg32 rng(seed, i);
    const double v = draw_inverse_gaussian(rng, p.scale / g, p.scale * p.scale);
    out[i] = p.loc + p.asym * v + std::sqrt(v) * rng.next_normal();
  }
  return out;
}

namespace detail {

inline void check_horizon_grid(const std::vector<int> &horizons) {
  if (horizons.empty())
    throw std::domain_error("simulate: horizon list is empty");
  int prev = 0;
  for (int h : horizons) {
    if (h <= prev)
      throw std::domain_error(
          "simulate: horizons must be strictly increasing and >= 1");
    prev = h;
  }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Path simulators.  The *_grid variants walk each path once and record the
// target variable at every requested horizon; the single-horizon wrappers are
// the same walk with a one-element grid.  Per-path substreams (seed, path)
// make the output independent of horizon batching and thread layout.
// ---------------------------------------------------------------------------

// cumulative H-period log return, one value per path and horizon
inline std::vector<std::vector<double>>
simulate_hng_grid(const HngParams &p, double h_next,
                  const std::vector<int> &horizons, std::size_t n,
                  std::uint64_t seed) {
  p.validate();
  if (!(h_next >= 0.0))
    throw std::domain_error("simulate_hng: h_next must be non-negative");
  detail::check_horizon_grid(horizons);
  const int h_max = horizons.back();
  std::vector<std::vector<double>> out(horizons.size(),
                                       std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Pcg32 rng(seed, i);
    double h = h_next;
    double acc = 0.0;
    std::size_t idx = 0;
    for (int t = 1; t <= h_max; ++t) {
      const double z = rng.next_normal();
      const double sq = std::sqrt(h);
      acc += p.r_f + (p.lambda_rp - 0.5) * h + sq * z;
      const double shock = z - p.gamma * sq;
      h = p.omega + p.beta * h + p.alpha * shock * shock;
      if (t == horizons[idx]) {
        out[idx][i] = acc;
        ++idx;
      }
    }
  }
  return out;
}

inline std::vector<double> simulate_hng(const HngParams &p, double h_next,
                                        int horizon, std::size_t n,
                                        std::uint64_t seed) {
  return simulate_hng_grid(p, h_next, {horizon}, n, seed).front();
}

// single-day realized variance H days ahead (not the aggregate): the
// conditional law of X_{t+1} is a non-central Gamma, drawn exactly as a
// Poisson-mixed Gamma with the mixing count on the lag-weighted intensity.
inline std::vector<std::vector<double>>
simulate_harg_grid(const HargParams &p,
                   const std::array<double, kHargLags> &lags,
                   const std::vector<int> &horizons, std::size_t n,
                   std::uint64_t seed) {
  p.validate();
  for (double v : lags)
    if (!(v >= 0.0))
      throw std::domain_error("simulate_harg: lags must be non-negative");
  detail::check_horizon_grid(horizons);
  const int h_max = horizons.back();
  const double w_d = p.beta_d;
  const double w_w = p.beta_w / 4.0;
  const double w_m = p.beta_m / 17.0;
  std::vector<std::vector<double>> out(horizons.size(),
                                       std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Pcg32 rng(seed, i);
    // ring buffer of the 22 most recent values, newest at `head`; the three
    // block sums are maintained incrementally as lags shift one slot per day
    std::array<double, kHargLags> buf = lags;
    std::size_t head = 0;
    double s_d = lags[0];
    double s_w = lags[1] + lags[2] + lags[3] + lags[4];
    double s_m = 0.0;
    for (std::size_t j = 5; j < kHargLags; ++j)
      s_m += lags[j];
    std::size_t idx = 0;
    for (int t = 1; t <= h_max; ++t) {
      const double theta = w_d * s_d + w_w * s_w + w_m * s_m;
      const long k = draw_poisson(rng, theta);
      const double x =
          p.eta * draw_gamma(rng, p.delta + static_cast<double>(k));
      // lag 1 joins the weekly block, lag 5 the monthly block, lag 22 drops
      const double old1 = buf[head];
      const double old5 = buf[(head + 4) % kHargLags];
      const double old22 = buf[(head + 21) % kHargLags];
      s_w += old1 - old5;
      s_m += old5 - old22;
      s_d = x;
      head = (head + kHargLags - 1) % kHargLags;
      buf[head] = x;
      if (t == horizons[idx]) {
        out[idx][i] = x;
        ++idx;
      }
    }
  }
  return out;
}

inline std::vector<double> simulate_harg(const HargParams &p,
                                         const std::array<double, kHargLags> &lags,
                                         int horizon, std::size_t n,
                                         std::uint64_t seed) {
  return simulate_harg_grid(p, lags, {horizon}, n, seed).front();
}

// average count over the horizon, one value per path and horizon
inline std::vector<std::vector<double>>
simulate_arp_grid(const ArpParams &p, double lambda_next,
                  const std::vector<int> &horizons, std::size_t n,
                  std::uint64_t seed) {
  p.validate();
  if (!(lambda_next > 0.0))
    throw std::domain_error("simulate_arp: lambda_next must be positive");
  detail::check_horizon_grid(horizons);
  const int h_max = horizons.back();
  std::vector<std::vector<double>> out(horizons.size(),
                                       std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    Pcg32 rng(seed, i);
    double lam = lambda_next;
    long sum = 0;
    std::size_t idx = 0;
    for (int t = 1; t <= h_max; ++t) {
      const long y = draw_poisson(rng, lam);
      sum += y;
      lam = p.omega + p.beta * lam + p.alpha * static_cast<double>(y);
      if (t == horizons[idx]) {
        out[idx][i] = static_cast<double>(sum) / static_cast<double>(t);
        ++idx;
      }
    }
  }
  return out;
}

inline std::vector<double> simulate_arp(const ArpParams &p, double lambda_next,
                                        int horizon, std::size_t n,
                                        std::uint64_t seed) {
  return simulate_arp_grid(p, lambda_next, {horizon}, n, seed).front();
}

// ---------------------------------------------------------------------------
// Moment estimation from samples
// ---------------------------------------------------------------------------
enum class McVariant { absolute, nonneg, integer };

struct McResult {
  double estimate = 0.0;
  double std_err = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

inline McResult mc_moment(const std::vector<double> &samples, double r,
                          double xi, McVariant variant,
                          std::uint64_t seed = 0) {
  if (samples.empty())
    throw std::domain_error("mc_moment: no samples");
  const bool r_integral = std::abs(r - std::nearbyint(r)) < 1e-12;
  if (variant == McVariant::integer && !r_integral)
    throw std::domain_error("mc_moment: integer variant needs integer r");
  // Welford, so the std-err does not lose digits to a large mean
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t cnt = 0;
  for (double x : samples) {
    const double base = x - xi;
    double term;
    if (variant == McVariant::absolute) {
      term = std::pow(std::abs(base), r);
    } else {
      if (base < 0.0 && !r_integral)
        throw std::domain_error(
            "mc_moment: negative base with fractional r; use the absolute variant");
      term = std::pow(base, r);
    }
    ++cnt;
    const double d = term - mean;
    mean += d / static_cast<double>(cnt);
    m2 += d * (term - mean);
  }
  McResult res;
  res.estimate = mean;
  res.n = samples.size();
  res.seed = seed;
  if (cnt > 1)
    res.std_err = std::sqrt(m2 / static_cast<double>(cnt - 1) /
                            static_cast<double>(cnt));
  return res;
}

// precision grade of an MC estimate: -log10(sigma / sqrt(n))
inline double accurate_digits(double sigma_r, std::size_t n) {
  if (!(sigma_r > 0.0))
    throw std::domain_error("accurate_digits: sigma must be positive");
  if (n < 1)
    throw std::domain_error("accurate_digits: n must be >= 1");
  return -std::log10(sigma_r / std::sqrt(static_cast<double>(n)));
}

// ---------------------------------------------------------------------------
// NIG density baseline.  Everything is assembled in log space because the
// exponential prefactor and K1 overflow/underflow separately long before
// their product does.
// ---------------------------------------------------------------------------
inline double nig_density(const NigParams &p, double x) {
  p.validate();
  const double g = p.gamma_aux();
  const double dx = x - p.loc;
  const double q = std::sqrt(p.scale * p.scale + dx * dx);
  const double v = p.tail * q;
  double log_k1;
  if (v > 400.0) {
    // large-argument expansion of K1; four correction terms leave a relative
    // error below 1e-13 at the switch point
    const double iv = 1.0 / v;
    const double series =
        1.0 + iv * (0.375 +
                    iv * (-0.1171875 +
                          iv * (0.1025390625 + iv * (-0.144195556640625))));
    log_k1 = 0.5 * std::log(M_PI / (2.0 * v)) - v + std::log(series);
  } else {
    log_k1 = std::log(std::cyl_bessel_k(1.0, v));
  }
  const double log_f = std::log(p.tail * p.scale / M_PI) + p.scale * g +
                       p.asym * dx + log_k1 - std::log(q);
  return std::exp(log_f);
}

// |x - xi|^r against the density, split at xi.  The substitution u = v^m
// flattens the u^r cusp at the origin; m is chosen so the transformed
// integrand vanishes at least linearly there.
inline double density_moment(const NigParams &p, double r, double xi,
                             const QuadConfig &quad = {}) {
  if (!(r > -1.0))
    throw std::domain_error("density_moment: r > -1 required");
  p.validate();
  const int m = std::max(2, static_cast<int>(std::ceil(2.0 / (r + 1.0))));
  const double md = static_cast<double>(m);
  auto one_side = [&](double sign) {
    auto g = [&](double v) {
      if (v == 0.0)
        return 0.0;
      const double u = std::pow(v, md);
      return md * std::pow(v, md * (r + 1.0) - 1.0) *
             nig_density(p, xi + sign * u);
    };
    return integrate_half_line(g, quad).value;
  };
  return one_side(+1.0) + one_side(-1.0);
}

} // namespace cmgf

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "cmgf/moments.hpp"
#include "cmgf/oracle.hpp"
#include "fixture_params.hpp"

using namespace cmgf;
using Catch::Approx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct SampleStats {
  double mean = 0.0, var = 0.0, se = 0.0;
  std::size_t n = 0;
};

SampleStats stats(const std::vector<double>& xs) {
  SampleStats s;
  s.n = xs.size();
  double m = 0.0, m2 = 0.0;
  std::size_t c = 0;
  for (double x : xs) {
    ++c;
    const double d = x - m;
    m += d / (double)c;
    m2 += d * (x - m);
  }
  s.mean = m;
  s.var = m2 / (double)(c - 1);
  s.se = std::sqrt(s.var / (double)c);
  return s;
}

}  // namespace

TEST_CASE("pcg32 streams", "[oracle][rng]") {
  SECTION("same seed and stream reproduce") {
    Pcg32 a(42, 7), b(42, 7);
    for (int i = 0; i < 8; ++i) CHECK(a.next_u32() == b.next_u32());
  }

  SECTION("streams are distinct") {
    Pcg32 a(42, 0), b(42, 1);
    int same = 0;
    for (int i = 0; i < 16; ++i)
      if (a.next_u32() == b.next_u32()) ++same;
    CHECK(same == 0);
  }

  SECTION("uniform ranges") {
    Pcg32 r(123, 0);
    for (int i = 0; i < 1000; ++i) {
      const double u = r.next_double();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      const double v = r.next_open();
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
  }

  SECTION("normal moments") {
    Pcg32 r(2024, 0);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = r.next_normal();
    auto s = stats(xs);
    CHECK_THAT(s.mean, WithinAbs(0.0, 4.0 * s.se));
    CHECK_THAT(s.var, WithinAbs(1.0, 4.0 * std::sqrt(2.0 / (double)s.n)));
  }
}

TEST_CASE("elementary samplers", "[oracle][rng]") {
  SECTION("gamma") {
    Pcg32 r(11, 0);
    for (double shape : {0.5, 3.7}) {
      std::vector<double> xs(100000);
      for (auto& x : xs) x = draw_gamma(r, shape);
      auto s = stats(xs);
      INFO("shape = " << shape);
      CHECK_THAT(s.mean, WithinAbs(shape, 4.0 * s.se));
    }
    CHECK_THROWS_AS(draw_gamma(r, 0.0), std::domain_error);
  }

  SECTION("poisson, including the chunked large-mean path") {
    Pcg32 r(12, 0);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = (double)draw_poisson(r, 60.0);
    auto s = stats(xs);
    CHECK_THAT(s.mean, WithinAbs(60.0, 4.0 * s.se));
    CHECK_THAT(s.var, WithinAbs(60.0, 4.0 * 60.0 * std::sqrt(2.0 / (double)s.n)));
    CHECK(draw_poisson(r, 0.0) == 0);
    CHECK_THROWS_AS(draw_poisson(r, -1.0), std::domain_error);
  }

  SECTION("inverse gaussian") {
    Pcg32 r(13, 0);
    const double mean = 2.0, shape = 8.0;
    std::vector<double> xs(100000), inv(100000);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = draw_inverse_gaussian(r, mean, shape);
      inv[i] = 1.0 / xs[i];
    }
    auto s = stats(xs);
    auto si = stats(inv);
    CHECK_THAT(s.mean, WithinAbs(mean, 4.0 * s.se));
    // E[1/V] = 1/mean + 1/shape distinguishes IG from lognormal impostors
    CHECK_THAT(si.mean, WithinAbs(1.0 / mean + 1.0 / shape, 4.0 * si.se));
    CHECK_THROWS_AS(draw_inverse_gaussian(r, -1.0, 1.0), std::domain_error);
  }
}

TEST_CASE("nig sampler agrees with its moments", "[oracle][nig]") {
  const auto p = nig_from_standardized(0.5, -1.0 / 3.0);
  const auto xs = sample_nig(p, 200000, 20240817);

  auto raw1 = mc_moment(xs, 1.0, 0.0, McVariant::integer);
  CHECK_THAT(raw1.estimate, WithinAbs(0.0, 4.0 * raw1.std_err));

  auto raw2 = mc_moment(xs, 2.0, 0.0, McVariant::integer);
  CHECK_THAT(raw2.estimate, WithinAbs(1.0, 4.0 * raw2.std_err));

  auto abs1 = mc_moment(xs, 1.0, 0.0, McVariant::absolute);
  CHECK_THAT(abs1.estimate,
             WithinAbs(0.75817260349722573, 4.0 * abs1.std_err));

  SECTION("sampling is reproducible and batch-independent") {
    const auto ys = sample_nig(p, 1000, 20240817);
    for (std::size_t i = 0; i < ys.size(); ++i) CHECK(ys[i] == xs[i]);
  }
}

TEST_CASE("nig density", "[oracle][nig]") {
  const auto p = nig_from_standardized(0.5, -1.0 / 3.0);

  SECTION("reference points") {
    CHECK_THAT(nig_density(p, 0.0), WithinRel(0.42525241127461793, 1e-12));
    CHECK_THAT(nig_density(p, 0.3), WithinRel(0.34106492217428034, 1e-12));
    CHECK_THAT(nig_density(p, -1.2), WithinRel(0.21935105813456071, 1e-12));
  }

  SECTION("normalization and unit variance through the density") {
    CHECK_THAT(density_moment(p, 0.0, 0.0), WithinRel(1.0, 1e-9));
    CHECK_THAT(density_moment(p, 2.0, 0.0), WithinRel(1.0, 1e-9));
  }

  SECTION("density integration vs contour moments") {
    auto m = nig_mgf(p);
    for (double r : {-0.5, 0.5, 1.0, 2.0, 3.0, 4.0}) {
      MomentSpec sp;
      sp.r = r;
      const double a = absolute_moment(m, sp);
      const double d = density_moment(p, r, 0.0);
      INFO("r = " << r);
      CHECK(std::abs(d - a) / std::max(1.0, std::abs(a)) < 1e-7);
    }
  }

  SECTION("second parameter set") {
    const auto q = nig_from_standardized(0.125, -0.0625);
    CHECK_THAT(density_moment(q, 4.0, 0.0), WithinRel(65.0 / 21.0, 1e-7));
  }

  SECTION("order range") {
    CHECK_THROWS_AS(density_moment(p, -1.0, 0.0), std::domain_error);
  }
}

TEST_CASE("hng simulator", "[oracle][hng]") {
  const HngParams p = fx::hng();
  const double h = fx::hng_h_uncond;

  SECTION("one-step mean and variance") {
    auto xs = simulate_hng(p, h, 1, 100000, 7);
    auto s = stats(xs);
    const double mean = p.r_f + (p.lambda_rp - 0.5) * h;
    CHECK_THAT(s.mean, WithinAbs(mean, 4.0 * s.se));
    CHECK_THAT(s.var, WithinAbs(h, 4.0 * h * std::sqrt(2.0 / (double)s.n)));
  }

  SECTION("grid recording equals separate runs") {
    auto grid = simulate_hng_grid(p, h, {5, 12}, 500, 3);
    auto at5 = simulate_hng(p, h, 5, 500, 3);
    auto at12 = simulate_hng(p, h, 12, 500, 3);
    CHECK(grid[0] == at5);
    CHECK(grid[1] == at12);
  }

  SECTION("alpha = 0 collapses to gaussian aggregates") {
    HngParams g;
    g.omega = 1e-5;
    g.beta = 0.9;
    g.alpha = 0.0;
    g.gamma = 0.0;
    g.lambda_rp = 0.5;
    auto xs = simulate_hng(g, 1e-4, 10, 200000, 19);
    auto s = stats(xs);
    double skew_num = 0.0;
    for (double x : xs) {
      const double d = (x - s.mean);
      skew_num += d * d * d;
    }
    const double skew =
        skew_num / (double)xs.size() / (s.var * std::sqrt(s.var));
    CHECK_THAT(skew, WithinAbs(0.0, 4.0 * std::sqrt(6.0 / (double)xs.size())));
  }

  SECTION("matches the contour moment at a deep horizon") {
    auto m = hng_mgf(p, HngState{h, 21});
    const double truth = integer_moment(m, 2);
    auto xs = simulate_hng(p, h, 21, 50000, 5);
    auto mc = mc_moment(xs, 2.0, 0.0, McVariant::integer, 5);
    CHECK_THAT(mc.estimate, WithinAbs(truth, 4.0 * mc.std_err));
    CHECK(mc.seed == 5);
    CHECK(mc.n == 50000);
  }
}

TEST_CASE("harg simulator", "[oracle][harg]") {
  const HargParams p = fx::harg();
  std::array<double, kHargLags> lags{};
  for (int j = 0; j < kHargLags; ++j)
    lags[j] = fx::harg_mean / 10.0 * (1.0 + 0.07 * j);

  SECTION("ring buffer matches a naive lag-shift reference") {
    const std::vector<int> horizons = {3, 17, 40};
    const std::size_t n = 40;
    const std::uint64_t seed = 91;

    std::vector<std::vector<double>> ref(horizons.size(),
                                         std::vector<double>(n));
    const double w_d = p.beta_d, w_w = p.beta_w / 4.0, w_m = p.beta_m / 17.0;
    for (std::size_t i = 0; i < n; ++i) {
      Pcg32 rng(seed, i);
      std::array<double, kHargLags> lag = lags;
      std::size_t idx = 0;
      for (int t = 1; t <= horizons.back(); ++t) {
        double theta = w_d * lag[0];
        for (int j = 1; j < 5; ++j) theta += w_w * lag[j];
        for (int j = 5; j < kHargLags; ++j) theta += w_m * lag[j];
        const long k = draw_poisson(rng, theta);
        const double x = p.eta * draw_gamma(rng, p.delta + (double)k);
        for (int j = kHargLags - 1; j > 0; --j) lag[j] = lag[j - 1];
        lag[0] = x;
        if (t == horizons[idx]) ref[idx][i] = x, ++idx;
      }
    }

    auto got = simulate_harg_grid(p, lags, horizons, n, seed);
    for (std::size_t hi = 0; hi < horizons.size(); ++hi)
      for (std::size_t i = 0; i < n; ++i) {
        INFO("horizon " << horizons[hi] << " path " << i);
        CHECK(got[hi][i] == ref[hi][i]);
      }
  }

  SECTION("one-step conditional mean") {
    auto xs = simulate_harg(p, lags, 1, 100000, 31);
    auto s = stats(xs);
    const auto phi = p.phi();
    double mean = p.eta * p.delta;
    for (int j = 0; j < kHargLags; ++j) mean += phi[j] * lags[j];
    CHECK_THAT(s.mean, WithinAbs(mean, 4.0 * s.se));
  }

  SECTION("matches the contour moment at a deep horizon") {
    auto m = harg_mgf(p, HargState{lags, 30});
    MomentSpec sp;
    sp.r = 0.5;
    const double truth = nonneg_moment(m, sp);
    auto xs = simulate_harg(p, lags, 30, 50000, 8);
    auto mc = mc_moment(xs, 0.5, 0.0, McVariant::nonneg, 8);
    CHECK_THAT(mc.estimate, WithinAbs(truth, 4.0 * mc.std_err));
  }
}

TEST_CASE("arp simulator", "[oracle][arp]") {
  const ArpParams p = fx::arp();

  SECTION("one-step counts are Poisson") {
    auto xs = simulate_arp(p, fx::arp_mean, 1, 100000, 17);
    auto s = stats(xs);
    CHECK_THAT(s.mean, WithinAbs(fx::arp_mean, 4.0 * s.se));
    CHECK_THAT(s.var, WithinAbs(fx::arp_mean,
                                4.0 * fx::arp_mean *
                                    std::sqrt(2.0 / (double)s.n)));
  }

  SECTION("zero frequency matches the declared atom") {
    auto m = arp_mgf(p, ArpState{fx::arp_mean, 3});
    auto xs = simulate_arp(p, fx::arp_mean, 3, 200000, 99);
    double zeros = 0.0;
    for (double x : xs)
      if (x == 0.0) zeros += 1.0;
    const double freq = zeros / (double)xs.size();
    const double se =
        std::sqrt(m.atom_mass * (1.0 - m.atom_mass) / (double)xs.size());
    CHECK_THAT(freq, WithinAbs(m.atom_mass, 4.0 * se));
  }

  SECTION("matches the contour moment at a deep horizon") {
    auto m = arp_mgf(p, ArpState{fx::arp_mean / 10.0, 30});
    MomentSpec sp;
    sp.r = 1.0;
    const double truth = nonneg_moment(m, sp);
    auto xs = simulate_arp(p, fx::arp_mean / 10.0, 30, 50000, 4);
    auto mc = mc_moment(xs, 1.0, 0.0, McVariant::nonneg, 4);
    CHECK_THAT(mc.estimate, WithinAbs(truth, 4.0 * mc.std_err));
  }

  SECTION("horizon grids validated") {
    CHECK_THROWS_AS(simulate_arp_grid(p, 1.0, {}, 10, 1), std::domain_error);
    CHECK_THROWS_AS(simulate_arp_grid(p, 1.0, {3, 3}, 10, 1),
                    std::domain_error);
    CHECK_THROWS_AS(simulate_arp_grid(p, 1.0, {5, 2}, 10, 1),
                    std::domain_error);
  }
}

TEST_CASE("mc moment estimator", "[oracle]") {
  SECTION("constant samples") {
    std::vector<double> xs(100, 9.0);
    auto r = mc_moment(xs, 1.0, 0.0, McVariant::integer);
    CHECK(r.estimate == 9.0);
    CHECK(r.std_err == 0.0);
    CHECK(r.n == 100);
  }

  SECTION("variant semantics") {
    std::vector<double> xs = {-2.0, 1.0};
    CHECK(mc_moment(xs, 3.0, 0.0, McVariant::integer).estimate ==
          Approx(-3.5));
    CHECK(mc_moment(xs, 1.0, 0.0, McVariant::absolute).estimate ==
          Approx(1.5));
    // fractional power of a negative base is a caller error, not a NaN
    CHECK_THROWS_AS(mc_moment(xs, 0.5, 0.0, McVariant::nonneg),
                    std::domain_error);
    CHECK_THROWS_AS(mc_moment(xs, 1.5, 0.0, McVariant::integer),
                    std::domain_error);
    CHECK_THROWS_AS(mc_moment({}, 1.0, 0.0, McVariant::integer),
                    std::domain_error);
  }

  SECTION("precision grade") {
    CHECK_THAT(accurate_digits(1.0, 1000000), WithinAbs(3.0, 1e-14));
    CHECK_THAT(accurate_digits(0.99, 1000000),
               WithinAbs(3.0043648054024501, 1e-12));
    CHECK_THROWS_AS(accurate_digits(0.0, 100), std::domain_error);
    CHECK_THROWS_AS(accurate_digits(1.0, 0), std::domain_error);
  }
}

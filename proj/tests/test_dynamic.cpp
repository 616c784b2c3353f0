#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cmgf/dynamic.hpp"
#include "cmgf/moments.hpp"
#include "fixture_params.hpp"

using namespace cmgf;
using Catch::Approx;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

static double rel_diff(cplx a, cplx b) {
  return std::abs(a - b) / std::max(1e-300, std::abs(b));
}

// ---------------------------------------------------------------------------
// Heston-Nandi GARCH
// ---------------------------------------------------------------------------

TEST_CASE("hng one-step coefficients and MGF", "[dynamic][hng]") {
  const HngParams p = fx::hng();

  SECTION("one-step coefficient at z = 1") {
    const auto c = detail::hng_coeffs(p, 1, cplx(1.0, 0.0));
    // b(1,z) = z(lambda - 1/2) + z^2/2; the half cancels at z = 1
    CHECK_THAT(c.b.real(), WithinRel(1.9781, 1e-14));
    CHECK_THAT(c.a.real(), WithinAbs(0.0, 1e-15));
  }

  SECTION("one-step MGF closed form") {
    HngState st{fx::hng_h_uncond, 1};
    auto m = hng_mgf(p, st);
    for (cplx z : {cplx(0.7, 1.3), cplx(-1.1, -0.4)}) {
      const cplx direct = std::exp(z * p.r_f +
                                   (z * (p.lambda_rp - 0.5) + 0.5 * z * z) *
                                       st.h_next);
      CHECK(rel_diff(m.evaluate(z), direct) < 1e-14);
    }
    CHECK(m.fast_decay);  // one-step law is Gaussian
  }

  SECTION("one-step law is the scaled-shifted normal") {
    const double h = fx::hng_h_uncond;
    HngState st{h, 1};
    auto m = hng_mgf(p, st);
    QuadConfig tight;
    tight.abs_tol = 1e-16;
    tight.rel_tol = 1e-12;
    const double mean = p.r_f + (p.lambda_rp - 0.5) * h;
    CHECK_THAT(integer_moment(m, 1, 0.0, tight), WithinRel(mean, 1e-10));
    CHECK_THAT(integer_moment(m, 2, mean, tight), WithinRel(h, 1e-9));
    // the mirrored integrand terms cancel pointwise to roundoff for the odd
    // central order; an absolute tolerance below the O(1)-magnitude noise
    // floor would just exhaust the panel budget on noise
    QuadConfig odd = tight;
    odd.abs_tol = 1e-13;
    CHECK_THAT(integer_moment(m, 3, mean, odd), WithinAbs(0.0, 1e-11));
    CHECK_THAT(integer_moment(m, 4, mean, tight),
               WithinRel(3.0 * h * h, 1e-6));
  }
}

TEST_CASE("hng multi-horizon means", "[dynamic][hng]") {
  const HngParams p = fx::hng();
  // E[aggregate] = (lambda - 1/2) * sum of forecast variances (r_f = 0),
  // with E[h_{t+1}] = omega + alpha + persistence * E[h_t]
  const std::vector<std::pair<int, double>> anchors = {
      {1, 0.00018381472595579346},
      {21, 0.0038601092450716643},
      {63, 0.011580327735214997},
      {126, 0.023160655470429999}};
  for (auto [H, truth] : anchors) {
    HngState st{fx::hng_h_uncond, H};
    auto m = hng_mgf(p, st);
    INFO("H = " << H);
    CHECK_THAT(integer_moment(m, 1), WithinRel(truth, 1e-9));
  }
}

TEST_CASE("hng two-step recursion vs nested one-step law", "[dynamic][hng]") {
  const HngParams p = fx::hng();
  const double h1 = fx::hng_h_uncond;
  auto m2 = hng_mgf(p, HngState{h1, 2});

  // Brute force: condition on the first day's shock z1 ~ N(0,1), apply the
  // one-step MGF to the variance it implies, integrate z1 out numerically.
  auto nested = [&](cplx z) {
    const double sq = std::sqrt(h1);
    auto g = [&](double t) {
      const double h2 = p.omega + p.beta * h1 +
                        p.alpha * (t - p.gamma * sq) * (t - p.gamma * sq);
      const cplx day1 = z * (p.r_f + (p.lambda_rp - 0.5) * h1 + sq * t);
      const cplx day2 =
          z * p.r_f + (z * (p.lambda_rp - 0.5) + 0.5 * z * z) * h2;
      return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI) *
             std::exp(day1 + day2);
    };
    return integrate_full_line(g, QuadConfig{});
  };

  const std::vector<cplx> pts = {{0.3, 1.7}, {1.0, -2.0}, {-1.2, 0.8},
                                 {1.6, 0.4}, {-0.5, -3.1}};
  for (cplx z : pts) {
    INFO("z = " << z.real() << " + " << z.imag() << "i");
    CHECK(rel_diff(m2.evaluate(z), nested(z)) < 1e-8);
  }
}

TEST_CASE("hng feasibility probe", "[dynamic][hng]") {
  SECTION("fixture strip hits the +-1.8 cap") {
    Strip s = hng_probe(fx::hng(), 21, fx::hng_h_uncond);
    CHECK_THAT(s.s_max, WithinAbs(1.8, 1e-12));
    CHECK_THAT(s.s_min, WithinAbs(-1.8, 1e-12));
  }

  SECTION("binding parameters: recursion leaves the log domain") {
    HngParams p;
    p.omega = 0.01;
    p.beta = 0.2;
    p.alpha = 0.3;
    p.gamma = 0.5;
    p.lambda_rp = 1.0;
    // two-step condition: b(1,s) = s/2 + s^2/2 < 1/(2 alpha); the root of
    // s^2 + s - 10/3 gives the largest feasible real abscissa
    const double s_star = 0.5 * (std::sqrt(43.0 / 3.0) - 1.0);
    CHECK_THROWS_AS(detail::hng_coeffs(p, 2, cplx(s_star + 0.05, 0.0)),
                    std::domain_error);
    CHECK_NOTHROW(detail::hng_coeffs(p, 2, cplx(s_star - 0.05, 0.0)));

    Strip s = hng_probe(p, 2, 0.5);
    CHECK(s.s_max <= 0.9 * s_star + 1e-9);
    CHECK(s.s_max > 0.05);

    // the probed strip still supports a working moment
    auto m = hng_mgf(p, HngState{0.5, 2});
    CHECK(std::isfinite(integer_moment(m, 1)));
  }

  SECTION("explosive persistence warns but still evaluates") {
    HngParams p;
    p.omega = 1e-6;
    p.beta = 0.9;
    p.alpha = 0.01;
    p.gamma = 4.0;
    p.lambda_rp = 1.5;
    CHECK(p.persistence() > 1.0);
    CHECK(p.warnings().size() == 1);
    auto m = hng_mgf(p, HngState{1e-4, 3});
    // finite-horizon mean stays closed form even when non-stationary
    double eh = 1e-4, acc = 0.0;
    for (int t = 0; t < 3; ++t) {
      acc += (p.lambda_rp - 0.5) * eh;
      eh = p.omega + p.alpha + p.persistence() * eh;
    }
    CHECK_THAT(integer_moment(m, 1), WithinRel(acc, 1e-8));
  }
}

// ---------------------------------------------------------------------------
// HARG realized variance
// ---------------------------------------------------------------------------

static std::array<double, kHargLags> flat_lags(double v) {
  std::array<double, kHargLags> a{};
  a.fill(v);
  return a;
}

TEST_CASE("harg one-step MGF and mean", "[dynamic][harg]") {
  const HargParams p = fx::harg();
  const auto phi = p.phi();
  std::array<double, kHargLags> lags{};
  for (int j = 0; j < kHargLags; ++j)
    lags[j] = fx::harg_mean * (1.0 + 0.05 * j);  // deliberately non-flat

  HargState st{lags, 1};
  auto m = harg_mgf(p, st);

  SECTION("closed form") {
    for (cplx z : {cplx(0.9, 2.1), cplx(-1.3, -0.6)}) {
      cplx load(0.0);
      for (int j = 0; j < kHargLags; ++j) load += phi[j] * lags[j];
      const cplx w = 1.0 - p.eta * z;
      const cplx direct = std::exp(-p.delta * std::log(w) + z / w * load);
      CHECK(rel_diff(m.evaluate(z), direct) < 1e-14);
    }
  }

  SECTION("conditional mean identity") {
    double mean = p.eta * p.delta;
    for (int j = 0; j < kHargLags; ++j) mean += phi[j] * lags[j];
    CHECK_THAT(integer_moment(m, 1), WithinRel(mean, 1e-10));
    MomentSpec one;
    one.r = 1.0;
    CHECK_THAT(nonneg_moment(m, one), WithinRel(mean, 1e-10));
  }
}

TEST_CASE("harg two-step recursion vs one-step composition", "[dynamic][harg]") {
  const HargParams p = fx::harg();
  const auto phi = p.phi();
  std::array<double, kHargLags> lags{};
  for (int j = 0; j < kHargLags; ++j)
    lags[j] = fx::harg_mean * (1.0 + 0.05 * j);

  auto m1 = harg_mgf(p, HargState{lags, 1});
  auto m2 = harg_mgf(p, HargState{lags, 2});

  // Tower property by hand: condition on X_{T+1}; its coefficient in the
  // exponent is b_1(1,w), the remaining lags shift one slot.
  auto nested = [&](cplx w) {
    const cplx w0 = 1.0 - p.eta * w;
    const cplx a1 = -p.delta * std::log(w0);
    cplx known(0.0);
    for (int j = 1; j < kHargLags; ++j)
      known += w / w0 * phi[j] * lags[j - 1];
    const cplx b1 = w / w0 * phi[0];
    return std::exp(a1 + known) * m1.evaluate_fn(b1);
  };

  const std::vector<cplx> pts = {{0.5, 1.1}, {-0.8, 2.4}, {1.2, -0.7},
                                 {-1.4, -3.3}, {0.9, 5.6}};
  for (cplx w : pts) {
    INFO("w = " << w.real() << " + " << w.imag() << "i");
    CHECK(rel_diff(m2.evaluate(w), nested(w)) < 1e-8);
  }
}

TEST_CASE("harg general lag order", "[dynamic][harg]") {
  // p = 1 collapses to a scalar autoregressive gamma; the two-step branch
  // condition has the closed bound s < 25/24 for eta = phi_1 = 0.6
  const std::vector<double> phi = {0.6};
  const double eta = 0.6, delta = 1.0;

  CHECK_NOTHROW(detail::harg_coeffs(phi, eta, delta, 1, cplx(25.0 / 24.0 + 0.05, 0.0)));
  CHECK_THROWS_AS(detail::harg_coeffs(phi, eta, delta, 2, cplx(25.0 / 24.0 + 0.05, 0.0)),
                  std::domain_error);
  CHECK_NOTHROW(detail::harg_coeffs(phi, eta, delta, 2, cplx(25.0 / 24.0 - 0.05, 0.0)));

  SECTION("two-step composition holds at p = 1") {
    const double lag = 0.8;
    auto coeff_mgf = [&](int H, cplx z) {
      const auto c = detail::harg_coeffs(phi, eta, delta, H, z);
      return std::exp(c.a + c.b[0] * lag);
    };
    for (cplx w : {cplx(0.3, 0.8), cplx(-0.4, 1.9)}) {
      const cplx w0 = 1.0 - eta * w;
      const cplx b1 = w / w0 * phi[0];
      const cplx nested = std::exp(-delta * std::log(w0)) * coeff_mgf(1, b1);
      CHECK(rel_diff(coeff_mgf(2, w), nested) < 1e-12);
    }
  }
}

TEST_CASE("harg feasibility and warnings", "[dynamic][harg]") {
  SECTION("fixture strip hits the cap") {
    const auto lags = flat_lags(fx::harg_mean);
    Strip s = harg_probe(fx::harg(), 30, &lags);
    CHECK_THAT(s.s_max, WithinAbs(1.8, 1e-12));
    CHECK_THAT(s.s_min, WithinAbs(-1.8, 1e-12));
  }

  SECTION("explosive persistence warns") {
    HargParams p = fx::harg();
    p.beta_d *= 1.3;
    p.beta_w *= 1.3;
    p.beta_m *= 1.3;
    CHECK(p.persistence() > 1.0);
    CHECK(p.warnings().size() == 1);
    CHECK(fx::harg().warnings().empty());
  }

  SECTION("parameter validation") {
    HargParams p = fx::harg();
    p.eta = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    HargState st{};
    st.lags[3] = -1.0;
    CHECK_THROWS_AS(st.validate(), std::invalid_argument);
  }
}

// ---------------------------------------------------------------------------
// Autoregressive Poisson
// ---------------------------------------------------------------------------

TEST_CASE("arp one-step law is plain Poisson", "[dynamic][arp]") {
  const ArpParams p = fx::arp();
  const double lam = fx::arp_mean;
  auto m = arp_mgf(p, ArpState{lam, 1});

  for (cplx z : {cplx(0.8, 1.9), cplx(-1.2, -0.3)}) {
    const cplx direct = std::exp(lam * (std::exp(z) - 1.0));
    CHECK(rel_diff(m.evaluate(z), direct) < 1e-13);
  }
  CHECK_THAT(m.atom_mass, WithinRel(std::exp(-lam), 1e-12));
  CHECK(m.lattice == 1.0);
  CHECK_FALSE(m.continuous);
}

TEST_CASE("arp two-step recursion vs nested Poisson sum", "[dynamic][arp]") {
  const ArpParams p = fx::arp();
  const double lam1 = fx::arp_mean / 10.0;
  auto m2 = arp_mgf(p, ArpState{lam1, 2});

  // Average count over two days: draw the first count y, the second day is
  // Poisson with intensity omega + beta*lam1 + alpha*y.
  auto nested = [&](cplx z) {
    const cplx half = z / 2.0;
    cplx total(0.0);
    double log_w = -lam1;  // log Poisson weight at y = 0
    for (int y = 0; y <= 80; ++y) {
      if (y > 0) log_w += std::log(lam1 / y);
      const double lam2 = p.omega + p.beta * lam1 + p.alpha * y;
      total += std::exp(log_w + half * (double)y +
                        lam2 * (std::exp(half) - 1.0));
    }
    return total;
  };

  const std::vector<cplx> pts = {{0.4, 1.3}, {-0.7, 2.2}, {1.1, -0.9},
                                 {-1.5, 0.6}, {0.8, -4.4}};
  for (cplx z : pts) {
    INFO("z = " << z.real() << " + " << z.imag() << "i");
    CHECK(rel_diff(m2.evaluate(z), nested(z)) < 1e-8);
  }
}

TEST_CASE("arp stationarity across horizons", "[dynamic][arp]") {
  const ArpParams p = fx::arp();
  const double lam = p.stationary_mean();
  CHECK_THAT(lam, WithinRel(fx::arp_mean, 1e-14));
  for (int H : {1, 10, 50}) {
    auto m = arp_mgf(p, ArpState{lam, H});
    INFO("H = " << H);
    CHECK_THAT(integer_moment(m, 1), WithinAbs(lam, 1e-6));
    CHECK(m.lattice == 1.0 / (double)H);
  }
}

TEST_CASE("arp overflow-bounded probe", "[dynamic][arp]") {
  const ArpParams p = fx::arp();

  SECTION("fixture strip hits the cap") {
    Strip s = arp_probe(p, 30, fx::arp_mean);
    CHECK_THAT(s.s_max, WithinAbs(1.8, 1e-12));
  }

  SECTION("large intensity binds through the overflow guard") {
    // H = 1: Re[B(z) * lambda] = 500(e^s - 1) <= 700 caps s at log(2.4)
    const double s_star = std::log(2.4);
    Strip s = arp_probe(p, 1, 500.0);
    CHECK_THAT(s.s_max, WithinAbs(0.9 * s_star, 1e-9));
    auto m = arp_mgf(p, ArpState{500.0, 1});
    CHECK_THROWS_AS(m.evaluate(cplx(0.95 * s_star, 0.0)), std::domain_error);
    // direct evaluation just above the bound overflows the guarded exp
    const auto c = detail::arp_coeffs(p, 1, cplx(1.02 * s_star, 0.0));
    CHECK_THROWS_AS(detail::guarded_mgf_exp(c.a + c.b * 500.0, "arp"),
                    std::domain_error);
  }

  SECTION("unit persistence warns") {
    ArpParams p2 = fx::arp();
    p2.beta = 0.8;
    p2.alpha = 0.2;
    CHECK(p2.warnings().size() == 1);
    CHECK(fx::arp().warnings().empty());
  }
}

// ---------------------------------------------------------------------------
// Term structures
// ---------------------------------------------------------------------------

TEST_CASE("term structure assembly", "[dynamic]") {
  const ArpParams p = fx::arp();
  ArpState st{fx::arp_mean, 1};
  auto ts = term_structure(p, st, {-0.5, 1.0}, {1, 5});

  REQUIRE(ts.cells.size() == 4);
  // row-major: horizons outer, orders inner
  CHECK(ts.cells[0].horizon == 1);
  CHECK(ts.cells[0].r == -0.5);
  CHECK(ts.cells[3].horizon == 5);
  CHECK(ts.cells[3].r == 1.0);

  // r = -0.5 is undefined with positive mass at zero: collected, not fatal
  CHECK_FALSE(ts.cells[0].ok);
  CHECK(ts.cells[0].error.find("order > 0") != std::string::npos);

  CHECK(ts.cells[1].ok);
  CHECK_THAT(ts.cells[1].value, WithinAbs(fx::arp_mean, 1e-6));
  CHECK(ts.cells[1].err_estimate > 0.0);
  CHECK(ts.cells[3].ok);
  CHECK_THAT(ts.cells[3].value, WithinAbs(fx::arp_mean, 1e-6));
}

TEST_CASE("term structure over hng horizons", "[dynamic][hng]") {
  auto ts = term_structure(fx::hng(), HngState{fx::hng_h_uncond, 1}, {1.0},
                           {1, 21, 63, 126});
  REQUIRE(ts.cells.size() == 4);
  const std::vector<double> truth = {0.00018381472595579346,
                                     0.0038601092450716643,
                                     0.011580327735214997,
                                     0.023160655470429999};
  for (size_t i = 0; i < 4; ++i) {
    REQUIRE(ts.cells[i].ok);
    CHECK_THAT(ts.cells[i].value, WithinRel(truth[i], 1e-9));
  }
}

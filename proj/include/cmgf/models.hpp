#pragma once
#include <array>
#include <cmath>
#include <string>

#include "model.hpp"

namespace cmgf {

inline MgfModel normal_mgf(double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("normal_mgf: sigma must be > 0");
  MgfModel m;
  m.evaluate_fn = [mu, sigma](cplx z) { return std::exp(mu * z + 0.5 * sigma * sigma * z * z); };
  m.descriptor = "normal(mu=" + std::to_string(mu) + ",sigma=" + std::to_string(sigma) + ")";
  m.fast_decay = true;
  return m;
}

inline MgfModel exponential_mgf(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("exponential_mgf: lambda must be > 0");
  MgfModel m;
  m.evaluate_fn = [lambda](cplx z) { return lambda / (lambda - z); };
  m.strip = Strip(-std::numeric_limits<double>::infinity(), lambda);
  m.descriptor = "exponential(lambda=" + std::to_string(lambda) + ")";
  m.nonneg = true;
  m.algebraic_decay = 1.0;  // |M| ~ lambda/t
  return m;
}

inline MgfModel poisson_mgf(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_mgf: lambda must be > 0");
  MgfModel m;
  m.evaluate_fn = [lambda](cplx z) { return std::exp(lambda * (std::exp(z) - 1.0)); };
  m.descriptor = "poisson(lambda=" + std::to_string(lambda) + ")";
  m.continuous = false;
  m.nonneg = true;
  m.lattice = 1.0;
  m.atom_x = 0.0;
  m.atom_mass = std::exp(-lambda);
  return m;
}

struct NigParams {
  double loc;    // location
  double scale;  // delta > 0
  double tail;   // alpha > 0
  double asym;   // beta, |beta| < alpha

  double gamma_aux() const { return std::sqrt(tail * tail - asym * asym); }
  void validate() const {
    if (!(scale > 0.0)) throw std::invalid_argument("NigParams: scale must be > 0");
    if (!(tail > std::abs(asym))) throw std::invalid_argument("NigParams: need |asym| < tail");
  }
};

// M(z) = exp(loc z + scale [gamma - sqrt(alpha^2 - (beta + z)^2)]), finite for
// Re z in (-(alpha+beta), alpha-beta). Principal square root; the radicand has
// positive real part on the strip so the branch cut is never approached.
inline MgfModel nig_mgf(const NigParams& p) {
  p.validate();
  MgfModel m;
  const double g = p.gamma_aux();
  m.evaluate_fn = [p, g](cplx z) {
    cplx u = p.asym + z;
    return std::exp(p.loc * z + p.scale * (g - std::sqrt(p.tail * p.tail - u * u)));
  };
  m.strip = Strip(-(p.tail + p.asym), p.tail - p.asym);
  m.descriptor = "nig";
  m.fast_decay = true;  // |M(s+it)| ~ e^{-scale |t|}
  return m;
}

// Zero-mean unit-variance NIG from the (xi, chi) shape parameters,
// 0 <= |chi| < xi < 1.
inline NigParams nig_from_standardized(double xi, double chi) {
  if (!(std::abs(chi) < xi && xi < 1.0))
    throw std::invalid_argument("nig_from_standardized: need 0 <= |chi| < xi < 1");
  const double zeta = std::sqrt(1.0 - xi * xi) / (xi * xi - chi * chi);
  NigParams p;
  p.tail = xi * zeta;
  p.asym = -chi * zeta;
  p.scale = std::sqrt(1.0 - xi * xi) * std::sqrt(xi * xi - chi * chi) / (xi * xi);
  p.loc = chi * std::sqrt(1.0 - xi * xi) / (xi * xi);
  return p;
}

// The four univariate slices of a bivariate MGF: M_{X1+X2}(t) = M(t,t),
// M_{X1-X2}(t) = M(t,-t), and the two marginals M(t,0), M(0,t).
struct BivariateSlices {
  MgfModel sum, difference, marginal1, marginal2;
};

inline BivariateSlices bivariate_slices(std::function<cplx(cplx, cplx)> m2,
                                        Strip sum_strip, Strip diff_strip,
                                        Strip m1_strip, Strip m2_strip) {
  BivariateSlices s;
  s.sum.evaluate_fn = [m2](cplx z) { return m2(z, z); };
  s.sum.strip = sum_strip;
  s.sum.descriptor = "bivariate-sum";
  s.difference.evaluate_fn = [m2](cplx z) { return m2(z, -z); };
  s.difference.strip = diff_strip;
  s.difference.descriptor = "bivariate-difference";
  s.marginal1.evaluate_fn = [m2](cplx z) { return m2(z, cplx(0.0)); };
  s.marginal1.strip = m1_strip;
  s.marginal1.descriptor = "bivariate-marginal1";
  s.marginal2.evaluate_fn = [m2](cplx z) { return m2(cplx(0.0), z); };
  s.marginal2.strip = m2_strip;
  s.marginal2.descriptor = "bivariate-marginal2";
  return s;
}

}  // namespace cmgf

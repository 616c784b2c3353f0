#pragma once
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

#include "complex_utils.hpp"

namespace cmgf {

// Open interval (s_min, 0) u (0, s_max) of real parts on which the MGF is
// finite; either end may be infinite.
struct Strip {
  double s_min = -std::numeric_limits<double>::infinity();
  double s_max = std::numeric_limits<double>::infinity();

  Strip() = default;
  Strip(double lo, double hi) : s_min(lo), s_max(hi) {
    if (!(s_min < 0.0 && 0.0 < s_max))
      throw std::invalid_argument("Strip: need s_min < 0 < s_max");
  }
  // Endpoints are exclusive; evaluation within eps of an endpoint is refused.
  bool contains(double s, double margin = 1e-12) const {
    return s > s_min + margin && s < s_max - margin;
  }
};

// An evaluable MGF plus the structural facts the moment layer needs but
// cannot infer from evaluations: support type, declared point mass, decay of
// |M(s+it)| along the contour.
struct MgfModel {
  std::function<cplx(cplx)> evaluate_fn;
  Strip strip;
  std::string descriptor;

  bool continuous = true;   // has a density (enables cdf/quantile)
  bool nonneg = false;      // Pr(X >= 0) = 1
  double lattice = 0.0;     // >0: support on {0, lattice, 2*lattice, ...}
  double atom_x = std::numeric_limits<double>::quiet_NaN();
  double atom_mass = 0.0;   // declared point mass at atom_x (lattice models)

  // Algebraic tail: |M(s+it)| ~ C t^{-decay}. Models with exponential or
  // faster decay set fast_decay instead and leave this 0.
  double algebraic_decay = 0.0;
  bool fast_decay = false;

  cplx evaluate(cplx z) const {
    if (!strip.contains(z.real()))
      throw std::domain_error(descriptor + ": Re(z) outside strip of regularity");
    return evaluate_fn(z);
  }

  bool has_atom_at(double xi) const {
    return atom_mass > 0.0 && std::abs(xi - atom_x) < 1e-12;
  }
};

}  // namespace cmgf

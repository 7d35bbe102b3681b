#pragma once

// Admissible cutoff chi(xi', xi) = chitilde(xi'/<xi>) with
//   chitilde = 1 on |t| <= delta/2,  chitilde = 0 on |t| >= delta,
// glued smoothly in between with the classical e^{-1/t} partition bump.
// Even in both arguments.

#include <cmath>

#include "common.hpp"

namespace paradiff {

struct CutoffProfile {
  double delta = 0.5;

  static double bump(double s) { return s <= 0.0 ? 0.0 : std::exp(-1.0 / s); }

  // smooth 0 -> 1 transition on [0, 1]
  static double glue(double s) {
    double a = bump(s), b = bump(1.0 - s);
    return a / (a + b);
  }

  double chi_tilde(double t) const {
    t = std::abs(t);
    if (t <= 0.5 * delta) return 1.0;
    if (t >= delta) return 0.0;
    return 1.0 - glue((t - 0.5 * delta) / (0.5 * delta));
  }

  double chi(double xi_prime, double xi) const {
    return chi_tilde(xi_prime / bracket(xi));
  }
};

inline CutoffProfile make_cutoff(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw parameter_error("cutoff delta must lie in (0,1), got " +
                          std::to_string(delta));
  return CutoffProfile{delta};
}

}  // namespace paradiff

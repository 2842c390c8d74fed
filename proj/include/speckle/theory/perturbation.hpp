#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include "speckle/core/types.hpp"

namespace speckle::theory {

/// Q = sin^2(q) / q^2, the correlation left after a uniform (-q, q] phase shift.
struct PerturbationFactor {
  double q = 0.0;
  double Q = 1.0;

  static PerturbationFactor from_q(double q) {
    detail::require(q >= 0.0 && q <= std::numbers::pi, "q must lie in [0, pi]");
    double Q;
    if (q < 1e-4) {
      const double q2 = q * q;
      Q = 1.0 - q2 / 3.0 + 2.0 * q2 * q2 / 45.0;
    } else if (q == std::numbers::pi) {
      Q = 0.0;
    } else {
      const double s = std::sin(q) / q;
      Q = s * s;
    }
    return {q, Q};
  }

  /// Direct construction from a correlation value (no corresponding q recorded).
  static PerturbationFactor from_Q(double Q) {
    detail::require(Q >= 0.0 && Q <= 1.0, "Q must lie in [0, 1]");
    return {std::numeric_limits<double>::quiet_NaN(), Q};
  }
};

}  // namespace speckle::theory

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <initializer_list>
#include <limits>
#include <vector>

#include "speckle/core/types.hpp"

namespace speckle::theory {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

inline constexpr unsigned kMaxQuadratureDepth = 15;

/// Adaptive 61-point Gauss-Kronrod on [a, b]; either bound may be infinite.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abs_tol = 1e-12) {
  double err = 0.0;
  double l1 = 0.0;
  const double tol = 1e-14;
  double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, kMaxQuadratureDepth,
                                                                            tol, &err, &l1);
  if (err > abs_tol && err > 1e-8 * l1) {
    throw Error("quadrature did not converge: error estimate " + std::to_string(err));
  }
  return {v, err};
}

/// Sum of integrals over consecutive breakpoints; useful when the integrand
/// has a sharp feature at a known location.
template <class F>
QuadratureResult integrate_split(F&& f, std::initializer_list<double> points, double abs_tol = 1e-12) {
  std::vector<double> p(points);
  QuadratureResult total;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    if (!(p[i + 1] > p[i])) continue;
    const auto r = integrate(f, p[i], p[i + 1], abs_tol);
    total.value += r.value;
    total.error_estimate += r.error_estimate;
  }
  return total;
}

}  // namespace speckle::theory

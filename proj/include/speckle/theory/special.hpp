#pragma once

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/factorials.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "speckle/core/types.hpp"

namespace speckle::theory {

inline double bessel_j0(double x) { return std::cyl_bessel_j(0.0, std::abs(x)); }

/// J1 for any real argument (odd function).
inline double bessel_j1(double x) {
  const double v = std::cyl_bessel_j(1.0, std::abs(x));
  return x < 0.0 ? -v : v;
}

/// J1(x)/x with its limit 1/2 at 0.
inline double bessel_j1_over_x(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 0.5 - x2 / 16.0 + x2 * x2 / 384.0;
  }
  return bessel_j1(x) / x;
}

inline constexpr double kBesselI0MaxArgument = 700.0;

inline double bessel_i0(double x, double max_argument = kBesselI0MaxArgument) {
  detail::require(x >= 0.0, "bessel_i0 requires x >= 0");
  if (x > max_argument) {
    throw ResourceError("bessel_i0 overflow: x = " + std::to_string(x) + " exceeds " +
                        std::to_string(max_argument));
  }
  return std::cyl_bessel_i(0.0, x);
}

/// ln I0(x) for x >= 0, without overflow.
inline double log_bessel_i0(double x) {
  detail::require(x >= 0.0, "log_bessel_i0 requires x >= 0");
  if (x <= kBesselI0MaxArgument) return std::log(std::cyl_bessel_i(0.0, x));
  // Hankel expansion: I0(x) ~ e^x / sqrt(2 pi x) * sum_k ((2k-1)!!)^2 / (k! 8^k x^k).
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 8; ++k) {
    term *= (2.0 * k - 1) * (2.0 * k - 1) / (8.0 * k * x);
    sum += term;
  }
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(sum);
}

inline double erfc(double x) { return std::erfc(x); }

namespace internal {

// Coefficients B_n / (n+1)! of the Bernoulli series for Li2(1 - e^{-u}).
inline const std::array<double, 24>& dilog_series_coefficients() {
  static const std::array<double, 24> c = [] {
    std::array<double, 24> out{};
    out[0] = 1.0;    // B_0 / 1!
    out[1] = -0.25;  // B_1 / 2!
    for (std::size_t m = 1; m < 12; ++m) {
      const int n = static_cast<int>(2 * m);
      out[2 * m] = boost::math::bernoulli_b2n<double>(static_cast<int>(m)) /
                   boost::math::factorial<double>(static_cast<unsigned>(n + 1));
      out[2 * m + 1] = 0.0;
    }
    return out;
  }();
  return c;
}

// Li2(y) for y in [0, 1/2].
inline double dilog_core(double y) {
  const double u = -std::log1p(-y);
  const auto& c = dilog_series_coefficients();
  double sum = 0.0;
  double up = u;
  for (std::size_t n = 0; n < c.size(); ++n) {
    sum += c[n] * up;
    up *= u;
  }
  return sum;
}

}  // namespace internal

/// Real dilogarithm Li2(x) for x <= 1.
inline double dilog(double x) {
  constexpr double pi2_6 = std::numbers::pi * std::numbers::pi / 6.0;
  detail::require(!std::isnan(x), "dilog argument is NaN");
  if (x > 1.0) throw InvalidArgument("dilog is real only for x <= 1");
  if (x == 1.0) return pi2_6;
  if (x == 0.0) return 0.0;
  if (x < -1.0) {
    // Inversion: Li2(x) = -pi^2/6 - ln^2(-x)/2 - Li2(1/x).
    const double l = std::log(-x);
    return -pi2_6 - 0.5 * l * l - dilog(1.0 / x);
  }
  if (x < 0.0) {
    // Landen: Li2(x) = -Li2(x/(x-1)) - ln^2(1-x)/2, with x/(x-1) in (0, 1/2].
    const double l = std::log1p(-x);
    return -internal::dilog_core(x / (x - 1.0)) - 0.5 * l * l;
  }
  if (x <= 0.5) return internal::dilog_core(x);
  // Reflection: Li2(x) = pi^2/6 - ln(x) ln(1-x) - Li2(1-x).
  return pi2_6 - std::log(x) * std::log1p(-x) - internal::dilog_core(1.0 - x);
}

/// 2F1(-n, -m; 1; x) = sum_j C(n,j) C(m,j) x^j.
inline double hyp2f1_neg_int(unsigned n, unsigned m, double x) {
  const unsigned top = std::min(n, m);
  double term = 1.0, sum = 1.0;
  for (unsigned j = 0; j < top; ++j) {
    term *= static_cast<double>(n - j) * static_cast<double>(m - j) / ((j + 1.0) * (j + 1.0)) * x;
    sum += term;
  }
  return sum;
}

inline double factorial(unsigned n) { return boost::math::factorial<double>(n); }

}  // namespace speckle::theory

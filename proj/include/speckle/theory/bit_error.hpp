#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "speckle/core/types.hpp"
#include "speckle/theory/perturbation.hpp"
#include "speckle/theory/quadrature.hpp"
#include "speckle/theory/special.hpp"

namespace speckle::theory {

enum class BitErrorMethod { Quadrature, Weak, Strong, ExactT0 };

inline std::string to_string(BitErrorMethod m) {
  switch (m) {
    case BitErrorMethod::Quadrature: return "quadrature";
    case BitErrorMethod::Weak: return "weak";
    case BitErrorMethod::Strong: return "strong";
    case BitErrorMethod::ExactT0: return "exact_T0";
  }
  return "?";
}

struct BitErrorResult {
  double probability = 0.0;
  /// epsilon for the weak expansion, eta = 1/epsilon otherwise (inf/0 at the edges).
  double expansion_parameter = 0.0;
  bool in_regime = true;
  /// Magnitude of the first omitted term of an expansion; 0 for exact methods.
  double next_order_term = 0.0;
};

inline constexpr double kWeakMaxEpsilon = 0.2;
inline constexpr double kStrongMaxParameter = 0.25;

/// epsilon = (sqrt2 / t) sqrt(1 - Q^2) / Q with t = T / sigma_G.
inline double weak_expansion_parameter(double t, double Q) {
  if (Q == 0.0 || t == 0.0) return std::numeric_limits<double>::infinity();
  return std::numbers::sqrt2 / t * std::sqrt(1.0 - Q * Q) / Q;
}

namespace internal {

// Q / sqrt(2 (1 - Q^2)): slope of the conditional Erfc argument.
inline double erfc_slope(double Q) { return Q / std::sqrt(2.0 * (1.0 - Q * Q)); }

// P(G-hat < 0 | G > T) by quadrature. Both numerator and denominator carry
// the common factor phi(t), so the integrand is shifted to s = u - t.
inline double bit_error_quadrature(double t, double Q) {
  if (Q >= 1.0) return 0.0;
  const double a = erfc_slope(Q);
  auto weight = [t](double s) { return std::exp(-t * s - 0.5 * s * s); };
  auto num_f = [&](double s) { return weight(s) * 0.5 * std::erfc(a * (t + s)); };
  const double inf = std::numeric_limits<double>::infinity();
  // Split at the Erfc shoulder when it lies inside the support of the weight.
  const double shoulder = a > 0.0 ? std::max(0.0, 1.0 / a - t) : 0.0;
  const double num = shoulder > 0.1 && shoulder < 40.0 ? integrate_split(num_f, {0.0, shoulder, inf}, 1e-13).value
                                    : integrate(num_f, 0.0, inf, 1e-13).value;
  const double den = integrate(weight, 0.0, inf, 1e-13).value;
  return num / den;
}

// e^{-t^2/2} / (Erfc(t/sqrt2)/2), computed without overflow for large t.
inline double mills_factor(double t) {
  if (t < 20.0) return std::exp(-0.5 * t * t) / (0.5 * std::erfc(t / std::numbers::sqrt2));
  // Asymptotic Mills ratio: Erfc(x)/2 ~ e^{-t^2/2} / (t sqrt(2 pi)) (1 - 1/t^2 + 3/t^4 - 15/t^6).
  const double i2 = 1.0 / (t * t);
  return t * std::sqrt(2.0 * std::numbers::pi) / (1.0 - i2 + 3.0 * i2 * i2 - 15.0 * i2 * i2 * i2);
}

}  // namespace internal

/// Probability that an enrolled robust bit (|G| > T) flips after a perturbation
/// with correlation factor Q, as a function of t = T / sigma_G.
inline BitErrorResult bit_error_probability(double t, const PerturbationFactor& Qf, BitErrorMethod method) {
  detail::require(t >= 0.0 && std::isfinite(t), "T/sigma_G must be finite and >= 0");
  const double Q = Qf.Q;
  detail::require(Q >= 0.0 && Q <= 1.0, "Q must lie in [0, 1]");
  const double eps = weak_expansion_parameter(t, Q);
  const double pi = std::numbers::pi;

  switch (method) {
    case BitErrorMethod::ExactT0:
      if (t != 0.0) throw InvalidArgument("exact_T0 applies only at T = 0");
      return {std::acos(Q) / pi, eps, true, 0.0};

    case BitErrorMethod::Quadrature:
      return {internal::bit_error_quadrature(t, Q), eps, true, 0.0};

    case BitErrorMethod::Weak: {
      if (Q >= 1.0) return {0.0, 0.0, true, 0.0};
      if (!std::isfinite(eps)) return {std::numeric_limits<double>::quiet_NaN(), eps, false, 0.0};
      const double e2 = eps * eps;
      const double pre = std::exp(-1.0 / e2) * 0.5 * internal::mills_factor(t) * t /
                         (2.0 * pi * std::numbers::sqrt2);
      const double e3 = e2 * eps, e5 = e3 * e2, e7 = e5 * e2;
      const double t2 = t * t;
      const double p = pre * (e3 - e5 * (1.5 + 0.5 * t2));
      const double next = pre * e7 * (15.0 + 5.0 * t2 + t2 * t2) / 4.0;
      return {p, eps, eps <= kWeakMaxEpsilon, std::abs(next)};
    }

    case BitErrorMethod::Strong: {
      // Written in a = eta / t so that T = 0 is regular.
      const double eta = std::isfinite(eps) ? 1.0 / eps : 0.0;
      if (Q >= 1.0) return {std::numeric_limits<double>::quiet_NaN(), eta, false, 0.0};
      const double a = internal::erfc_slope(Q);
      const double t2 = t * t;
      const double pre = std::numbers::sqrt2 / pi * internal::mills_factor(t);
      const double series = a - a * a * a * (t2 + 2.0) / 3.0;
      const double p = 0.5 * (1.0 - series * pre);
      const double next = 0.5 * pre * std::pow(a, 5) * (t2 * t2 + 4.0 * t2 + 8.0) / 10.0;
      const bool ok = eta <= kStrongMaxParameter && a <= kStrongMaxParameter;
      return {p, eta, ok, std::abs(next)};
    }
  }
  throw InvalidArgument("unknown bit error method");
}

}  // namespace speckle::theory

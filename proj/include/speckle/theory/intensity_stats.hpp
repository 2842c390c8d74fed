#pragma once

#include <cmath>

#include "speckle/core/types.hpp"
#include "speckle/theory/perturbation.hpp"
#include "speckle/theory/special.hpp"

namespace speckle::theory {

inline double intensity_pdf(double I, double I_av) {
  detail::require(I_av > 0.0, "I_av must be > 0");
  return I < 0.0 ? 0.0 : std::exp(-I / I_av) / I_av;
}

/// C_I = 4 [J1(r/M) / (r/M)]^2 with r the separation (same length unit as M).
inline double intensity_correlation(double r, double M) {
  detail::require(M > 0.0, "M must be > 0");
  const double j = bessel_j1_over_x(r / M);
  return 4.0 * j * j;
}

inline double intensity_correlation(Vec2 dx, double M) { return intensity_correlation(norm(dx), M); }

/// <I(x)^n I(x')^m> = I_av^(n+m) n! m! 2F1(-n, -m; 1; C).
inline double joint_intensity_moment(unsigned n, unsigned m, double C, double I_av) {
  detail::require(C >= 0.0 && C <= 1.0, "C must lie in [0, 1]");
  return std::pow(I_av, n + m) * factorial(n) * factorial(m) * hyp2f1_neg_int(n, m, C);
}

inline double joint_intensity_pdf(double I1, double I2, double C, double I_av) {
  detail::require(I_av > 0.0, "I_av must be > 0");
  detail::require(C >= 0.0 && C < 1.0, "joint intensity density needs 0 <= C < 1");
  if (I1 < 0.0 || I2 < 0.0) return 0.0;
  const double one_c = 1.0 - C;
  const double arg = 2.0 * std::sqrt(I1 * I2) / I_av * std::sqrt(C) / one_c;
  const double log_p = -std::log(I_av * I_av * one_c) - (I1 + I2) / (I_av * one_c) + log_bessel_i0(arg);
  return std::exp(log_p);
}

/// Perturbation average of I-hat at fixed unperturbed I.
inline double perturbed_intensity_mean(double I, double I_av, const PerturbationFactor& Q) {
  return Q.Q * I + (1.0 - Q.Q) * I_av;
}

}  // namespace speckle::theory

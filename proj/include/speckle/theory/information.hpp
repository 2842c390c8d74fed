#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "speckle/core/types.hpp"
#include "speckle/theory/gabor_stats.hpp"
#include "speckle/theory/perturbation.hpp"
#include "speckle/theory/special.hpp"

namespace speckle::theory {

/// Constants of the detector-noise mutual information for one Gabor direction.
/// L and ell in pixels, c2 in pixels^2.
struct MIParams {
  double L = 800.0;
  double ell = 5.0;
  double c1 = 0.0;
  double c2 = 1.0;
  /// Replace the L^2 prefactor by pi M^2 (result per average speckle area).
  bool per_speckle = false;
  double M = 0.0;

  void validate() const {
    detail::require(c1 >= 0.0 && std::isfinite(c1), "c1 must be finite and >= 0");
    detail::require(c2 > 0.0, "c2 must be > 0");
    detail::require(ell > 0.0 && ell < L, "need 0 < ell < L");
    detail::require(!per_speckle || M > 0.0, "per-speckle normalisation needs M > 0");
  }

  /// c1 = 2 pi Sigma^2 (I_av/N_I)^2 M^2 / t, c2 = M^2 Sigma^2 / 2.
  static MIParams from_physical(double L, double ell, double M, double snr, double t = 1.0,
                                double Sigma = kDefaultSigma, bool per_speckle = false) {
    detail::require(M > 0.0 && t > 0.0 && snr >= 0.0, "need M > 0, t > 0, I_av/N_I >= 0");
    MIParams p{L, ell, 2.0 * std::numbers::pi * Sigma * Sigma * snr * snr * M * M / t,
               0.5 * M * M * Sigma * Sigma, per_speckle, M};
    p.validate();
    return p;
  }

  /// Regime indicator y = c1 exp(-c2 pi^2 / ell^2).
  double y() const { return c1 * std::exp(-c2 * std::numbers::pi * std::numbers::pi / (ell * ell)); }

  double area() const { return per_speckle ? std::numbers::pi * M * M : L * L; }
  double u_low() const { return std::numbers::pi * std::numbers::pi / (L * L); }
  double u_high() const { return std::numbers::pi * std::numbers::pi / (ell * ell); }

  MIParams with_c1(double c) const {
    MIParams p = *this;
    p.c1 = c;
    return p;
  }
};

enum class MIMethod { ExactSum, Dilog, LargeSnr, SmallSnr };

inline std::string to_string(MIMethod m) {
  switch (m) {
    case MIMethod::ExactSum: return "exact_sum";
    case MIMethod::Dilog: return "dilog";
    case MIMethod::LargeSnr: return "large_snr";
    case MIMethod::SmallSnr: return "small_snr";
  }
  return "?";
}

inline MIMethod parse_mi_method(const std::string& s) {
  if (s == "exact_sum") return MIMethod::ExactSum;
  if (s == "dilog") return MIMethod::Dilog;
  if (s == "large_snr") return MIMethod::LargeSnr;
  if (s == "small_snr") return MIMethod::SmallSnr;
  throw InvalidArgument("unknown MI method '" + s + "'");
}

struct MIResult {
  double nats = 0.0;
  double bits = 0.0;
  double y = 0.0;
  /// False when an asymptotic method is used outside its regime.
  bool in_regime = true;
};

inline constexpr double kLargeSnrMinY = 10.0;
inline constexpr double kSmallSnrMaxY = 0.1;
inline constexpr double kSmallSnrMinC1 = 10.0;

namespace internal {

inline MIResult make_mi(double nats, double y, bool in_regime) {
  return {nats, nats / std::numbers::ln2, y, in_regime};
}

// 1/2 sum ln(1 + c1 e^{-c2 p^2}) over p = (i, j) pi/L, i, j != 0, |p| < pi/ell.
inline double momentum_sum(const MIParams& p) {
  const double step = std::numbers::pi / p.L;
  const double pmax2 = p.u_high();
  const long n = static_cast<long>(std::floor(p.L / p.ell));
  double total = 0.0;
  for (long i = 1; i <= n; ++i) {
    double row = 0.0;
    for (long j = 1; j <= n; ++j) {
      const double p2 = (static_cast<double>(i * i) + static_cast<double>(j * j)) * step * step;
      if (p2 >= pmax2) break;
      row += std::log1p(p.c1 * std::exp(-p.c2 * p2));
    }
    total += row;
  }
  // Four quadrants, times 1/2.
  return 2.0 * total;
}

// integral of ln(1 + c1 e^{-c2 u}) du over [u_lo, u_hi].
inline double log_integral(double c1, double c2, double u_lo, double u_hi) {
  if (c1 == 0.0) return 0.0;
  return (dilog(-c1 * std::exp(-c2 * u_hi)) - dilog(-c1 * std::exp(-c2 * u_lo))) / c2;
}

}  // namespace internal

/// The closed-form antiderivative exactly as printed,
/// -Dilog(-e^{c2 u}/c1)/c2 - c2 u^2/2 + u ln c1, for cross-checks.
inline double dilog_bracket_printed(double c1, double c2, double u) {
  return -dilog(-std::exp(c2 * u) / c1) / c2 - 0.5 * c2 * u * u + u * std::log(c1);
}

inline MIResult mi_detector(const MIParams& p, MIMethod method) {
  p.validate();
  const double y = p.y();
  if (p.c1 == 0.0) return internal::make_mi(0.0, y, true);
  const double area_scale = p.area() / (p.L * p.L);
  switch (method) {
    case MIMethod::ExactSum:
      return internal::make_mi(area_scale * internal::momentum_sum(p), y, true);
    case MIMethod::Dilog:
      return internal::make_mi(
          p.area() / (2.0 * std::numbers::pi) * internal::log_integral(p.c1, p.c2, p.u_low(), p.u_high()), y,
          true);
    case MIMethod::LargeSnr: {
      const double v = std::numbers::pi * p.area() / (2.0 * p.ell * p.ell) *
                       (std::log(p.c1) - p.c2 * std::numbers::pi * std::numbers::pi / (2.0 * p.ell * p.ell));
      return internal::make_mi(v, y, y >= kLargeSnrMinY);
    }
    case MIMethod::SmallSnr: {
      const double l = std::log(p.c1);
      const double v = p.area() / (4.0 * std::numbers::pi * p.c2) * (l * l + std::numbers::pi * std::numbers::pi / 3.0);
      return internal::make_mi(v, y, y <= kSmallSnrMaxY && p.c1 >= kSmallSnrMinC1);
    }
  }
  throw InvalidArgument("unknown MI method");
}

enum class PerturbedMIMethod { Determinant, Dilog };

/// Information reproducibly shared by noiseless G and perturbed, noisy G-hat.
/// The determinant form evaluates mi_detector(c1) - mi_detector((1-Q^2) c1)
/// with the given evaluation mode (exact_sum by default).
inline MIResult mi_perturbed(const MIParams& p, const PerturbationFactor& Q, PerturbedMIMethod method,
                             MIMethod determinant_mode = MIMethod::ExactSum) {
  p.validate();
  const double c1b = (1.0 - Q.Q * Q.Q) * p.c1;
  if (method == PerturbedMIMethod::Determinant) {
    const auto a = mi_detector(p, determinant_mode);
    const auto b = mi_detector(p.with_c1(c1b), determinant_mode);
    return internal::make_mi(a.nats - b.nats, p.y(), a.in_regime && b.in_regime);
  }
  // ln(1/(1-Q^2)) u-term plus the dilog difference, in the cancellation-free
  // form; identical to the printed expression by the Li2 inversion formula.
  const double v = p.area() / (2.0 * std::numbers::pi) *
                   (internal::log_integral(p.c1, p.c2, p.u_low(), p.u_high()) -
                    internal::log_integral(c1b, p.c2, p.u_low(), p.u_high()));
  return internal::make_mi(v, p.y(), true);
}

/// Printed closed form for the perturbed information (valid for 0 < Q < 1, c1 > 0).
inline double mi_perturbed_printed_nats(const MIParams& p, const PerturbationFactor& Q) {
  detail::require(Q.Q > 0.0 && Q.Q < 1.0 && p.c1 > 0.0, "printed form needs 0 < Q < 1 and c1 > 0");
  const double one_q2 = 1.0 - Q.Q * Q.Q;
  const double pi = std::numbers::pi;
  auto bracket = [&](double u) {
    return -dilog(-std::exp(p.c2 * u) / p.c1) + dilog(-std::exp(p.c2 * u) / (one_q2 * p.c1));
  };
  return pi * p.area() / (2.0 * p.ell * p.ell) * (1.0 - p.ell * p.ell / (p.L * p.L)) * std::log(1.0 / one_q2) +
         p.area() / (2.0 * pi * p.c2) * (bracket(p.u_high()) - bracket(p.u_low()));
}

/// -1/2 sum ln(1 - l_XY^2 / (l_X l_Y)) for covariances sharing an eigenbasis.
inline MIResult mi_gaussian_general(std::span<const double> lambda_X, std::span<const double> lambda_Y,
                                    std::span<const double> lambda_XY) {
  detail::require(lambda_X.size() == lambda_Y.size() && lambda_X.size() == lambda_XY.size(),
                  "spectra must have equal length");
  double nats = 0.0;
  for (std::size_t i = 0; i < lambda_X.size(); ++i) {
    detail::require(lambda_X[i] > 0.0 && lambda_Y[i] > 0.0, "covariance spectra must be positive");
    const double r = 1.0 - lambda_XY[i] * lambda_XY[i] / (lambda_X[i] * lambda_Y[i]);
    detail::require(r > 0.0, "joint covariance is not positive definite");
    nats -= 0.5 * std::log(r);
  }
  return internal::make_mi(nats, 0.0, true);
}

}  // namespace speckle::theory

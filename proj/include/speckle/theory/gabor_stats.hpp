#pragma once

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <numbers>

#include "speckle/core/types.hpp"
#include "speckle/theory/intensity_stats.hpp"
#include "speckle/theory/quadrature.hpp"
#include "speckle/theory/special.hpp"

namespace speckle::theory {

inline constexpr double kDefaultSigma = 1.29;

/// Gabor transform width w, wave number k, speckle scale M (all in pixel units).
struct GaborStatParams {
  double w = 1.0;
  double k = 1.0;
  double M = 1.0;
  double Sigma = kDefaultSigma;
  double I_av = 1.0;

  static GaborStatParams create(double w, double k, double M, double I_av = 1.0,
                                double Sigma = kDefaultSigma) {
    GaborStatParams p{w, k, M, Sigma, I_av};
    p.validate();
    return p;
  }

  void validate() const {
    detail::require(w > 0.0 && M > 0.0 && Sigma > 0.0, "w, M and Sigma must be > 0");
    detail::require(k >= 0.0, "k must be >= 0");
    detail::require(I_av > 0.0, "I_av must be > 0");
  }

  /// gamma = 1/2 [1 + M^2 Sigma^2 / (2 w^2)]^-1, strictly inside (0, 1/2).
  double gamma() const { return 0.5 / (1.0 + M * M * Sigma * Sigma / (2.0 * w * w)); }
};

inline double sigma_G_sq(const GaborStatParams& p) {
  const double g = p.gamma();
  const double wk2 = p.w * p.w * p.k * p.k;
  // e^{-(1-g)x} sinh(g x), written so large w k cannot overflow.
  return p.I_av * p.I_av * (1.0 - 2.0 * g) * 0.5 * (std::exp(-(1.0 - 2.0 * g) * wk2) - std::exp(-wk2));
}

/// Correlation of G(w, k, x) with G(w, k', x'), dx = x' - x.
inline double correlation_CG(const GaborStatParams& p, Vec2 k, Vec2 kp, Vec2 dx) {
  const double g = p.gamma();
  const double w2 = p.w * p.w;
  const double kk = dot(k, kp);
  const double num = std::exp(g * w2 * kk) * std::cos(g * dot(dx, kp + k)) -
                     std::exp(-g * w2 * kk) * std::cos(g * dot(dx, kp - k));
  const double den = 2.0 * std::sqrt(std::sinh(g * w2 * norm_sq(k))) * std::sqrt(std::sinh(g * w2 * norm_sq(kp)));
  return std::exp(-0.5 * g * norm_sq(dx) / w2) * num / den;
}

enum class Block { Diagonal, Cross };

/// Gabor signal covariance blocks. For Block::Diagonal only k1 is used.
inline double cov_blocks_G(Vec2 dx, Block block, const GaborStatParams& p, Vec2 k1, Vec2 k2 = {}) {
  const double g = p.gamma();
  const double w2 = p.w * p.w;
  const double I2 = p.I_av * p.I_av;
  const double env = std::exp(-0.5 * g * norm_sq(dx) / w2);
  if (block == Block::Diagonal) {
    const double wk2 = w2 * norm_sq(k1);
    return I2 * (0.5 - g) * env *
           (std::exp((2.0 * g - 1.0) * wk2) * std::cos(2.0 * g * dot(k1, dx)) - std::exp(-wk2));
  }
  const double wk2 = w2 * norm_sq(k1);
  return -I2 * (1.0 - 2.0 * g) * std::exp((g - 1.0) * wk2) * env * std::sin(g * dot(k1, dx)) *
         std::sin(g * dot(k2, dx));
}

/// White detector noise: N_I per sqrt(pixel area), pixel area t.
struct NoiseParams {
  double N_I = 0.0;
  double t = 1.0;

  static NoiseParams create(double N_I, double t = 1.0) {
    detail::require(N_I >= 0.0, "N_I must be >= 0");
    detail::require(t > 0.0, "pixel area t must be > 0");
    return {N_I, t};
  }
};

inline double cov_blocks_N(Vec2 dx, Block block, const NoiseParams& noise, double w, Vec2 k1, Vec2 k2 = {}) {
  const double pre = noise.N_I * noise.N_I * noise.t / (8.0 * std::numbers::pi * w * w);
  const double env = std::exp(-norm_sq(dx) / (4.0 * w * w));
  const double wk2 = w * w * norm_sq(k1);
  if (block == Block::Diagonal) return pre * env * (std::cos(dot(k1, dx)) - std::exp(-wk2));
  return -2.0 * pre * env * std::exp(-0.5 * wk2) * std::sin(0.5 * dot(k1, dx)) * std::sin(0.5 * dot(k2, dx));
}

/// Fourier transform (per lattice cell ell^2) of the diagonal signal block.
inline double fourier_cov_G(Vec2 pvec, Vec2 kj, const GaborStatParams& p, double ell) {
  const double g = p.gamma();
  const double w2 = p.w * p.w;
  const double s = std::sinh(w2 * dot(kj, pvec));
  return 4.0 * std::numbers::pi * p.I_av * p.I_av * w2 / (ell * ell) * (0.5 / g - 1.0) *
         std::exp(-w2 * norm_sq(kj)) * std::exp(-w2 * norm_sq(pvec) / (2.0 * g)) * s * s;
}

inline double fourier_cov_N(Vec2 pvec, Vec2 kj, const NoiseParams& noise, double w, double ell) {
  const double w2 = w * w;
  const double s = std::sinh(w2 * dot(kj, pvec));
  return noise.N_I * noise.N_I * noise.t / (ell * ell) * std::exp(-w2 * norm_sq(kj)) *
         std::exp(-w2 * norm_sq(pvec)) * s * s;
}

/// Variance of G computed with the exact Bessel intensity correlation instead
/// of its Gaussian approximation (continuum Gabor integral, untruncated envelope).
inline double sigma_G_sq_bessel(const GaborStatParams& p) {
  const double w2 = p.w * p.w;
  const double floor = std::exp(-p.k * p.k * w2);
  auto f = [&](double r) {
    return r * intensity_correlation(r, p.M) * std::exp(-r * r / (4.0 * w2)) * (bessel_j0(p.k * r) - floor);
  };
  const double rmax = 2.0 * p.w * 9.0;
  const double v = integrate(f, 0.0, rmax, 1e-14).value;
  return p.I_av * p.I_av * v / (4.0 * w2);
}

/// Same-direction correlation of G at separation dx with the exact Bessel C_I.
/// Evaluated in the Fourier domain, where C_I becomes the pupil overlap
/// acos(u) - u sqrt(1 - u^2), u = |q| M / 2, and the kernel overlap a sum of Gaussians.
inline double correlation_CG_bessel(const GaborStatParams& p, Vec2 k, Vec2 dx) {
  p.validate();
  const double w2 = p.w * p.w;
  const double floor = std::exp(-norm_sq(k) * w2);
  const double qmax = 2.0 / p.M;
  auto cov = [&](Vec2 s) {
    auto radial = [&](double q) {
      const double u = std::min(1.0, q / qmax);
      const double pupil = std::acos(u) - u * std::sqrt(1.0 - u * u);
      // Periodic and smooth in the angle: the trapezoid rule converges spectrally.
      constexpr int kAngles = 256;
      double ang = 0.0;
      for (int i = 0; i < kAngles; ++i) {
        const Vec2 qv = polar_vec(q, 2.0 * std::numbers::pi * i / kAngles);
        const double a = std::exp(-w2 * norm_sq(qv - k)) + std::exp(-w2 * norm_sq(qv + k)) -
                         2.0 * floor * std::exp(-w2 * q * q);
        ang += a * std::cos(dot(qv, s));
      }
      return q * pupil * ang * (2.0 * std::numbers::pi / kAngles);
    };
    return integrate(radial, 0.0, qmax, 1e-11).value;
  };
  return cov(dx) / cov({0.0, 0.0});
}

/// Small-w regime variance 4 w^4 k^2 I^2 M^-2 e^{-w^2 k^2}, as printed. The
/// exact lattice moment converges to one eighth of this.
inline double sigma_G_sq_small_w(const GaborStatParams& p) {
  const double w2 = p.w * p.w;
  return 4.0 * w2 * w2 * p.k * p.k * p.I_av * p.I_av / (p.M * p.M) * std::exp(-w2 * p.k * p.k);
}

struct SigmaFit {
  double Sigma = 0.0;
  double residual = 0.0;  // weighted mean square residual
};

/// Least-squares fit of exp(-r^2 / (2 Sigma^2 M^2)) to C_I over r/M in [0, u_max].
/// radial_weight applies the area element r dr, as for a 2-D fit.
inline SigmaFit fit_sigma(double u_max = 3.831705970207512, bool radial_weight = true) {
  detail::require(u_max > 0.0, "fit range must be > 0");
  auto cost = [&](double S) {
    auto f = [&](double u) {
      const double d = intensity_correlation(u, 1.0) - std::exp(-u * u / (2.0 * S * S));
      return (radial_weight ? u : 1.0) * d * d;
    };
    return integrate(f, 0.0, u_max, 1e-13).value;
  };
  const auto [S, c] = boost::math::tools::brent_find_minima(cost, 0.5, 3.0, 40);
  const double norm = radial_weight ? 0.5 * u_max * u_max : u_max;
  return {S, c / norm};
}

}  // namespace speckle::theory

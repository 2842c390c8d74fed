#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <numbers>
#include <string>
#include <vector>

#include "speckle/core/geometry.hpp"
#include "speckle/core/types.hpp"
#include "speckle/theory/gabor_stats.hpp"

namespace speckle::theory {

enum class FourthMomentRegime { LargeW, SmallW };

struct FourthMomentResult {
  double value = 0.0;
  /// Variance used in the Gaussian part (regime-specific).
  double sigma_sq = 0.0;
  double gaussian_part = 0.0;
  bool in_regime = true;
};

/// <G^4> in the w >~ 3M regime or the w << M regime.
inline FourthMomentResult fourth_moment_G(const GaborStatParams& p, FourthMomentRegime regime) {
  p.validate();
  if (regime == FourthMomentRegime::LargeW) {
    const double s2 = sigma_G_sq(p);
    const double wk2 = p.w * p.w * p.k * p.k;
    const double r = p.M / p.w;
    const double I4 = std::pow(p.I_av, 4);
    const double ng = 1.5 * I4 * std::pow(r, 6) * (1.0 - 2.0 * std::exp(-0.5 * wk2) + std::exp(-2.0 * wk2));
    return {3.0 * s2 * s2 + ng, s2, 3.0 * s2 * s2, p.w >= 3.0 * p.M};
  }
  const double s2 = sigma_G_sq_small_w(p);
  return {3.0 * s2 * s2 * (1.0 + 1.0 / 64.0), s2, 3.0 * s2 * s2, p.w <= 0.3 * p.M};
}

/// Physical-unit Gabor setup for the exact oracles: lengths in meters,
/// wave vector in radians per meter.
struct GaborProbe {
  double w = 0.0;
  Vec2 k{};
  Vec2 x0{};
};

struct MomentBreakdown {
  /// Cycle type written as e.g. "2+2" or "4".
  std::string cycle_type;
  std::size_t permutations = 0;
  double contribution = 0.0;
};

struct BruteForceMoment {
  double value = 0.0;
  /// Imaginary part of [i lambda^2/z^2]^n (...); the real-valued sum makes it
  /// carry the whole result for odd n.
  double imaginary_part = 0.0;
  std::vector<MomentBreakdown> by_cycle_type;
  double terms = 0.0;
};

inline constexpr double kEnumerationBudget = 1e9;

namespace internal {

// All permutations of {0..n-1} without fixed points, grouped by sorted cycle lengths.
inline std::map<std::vector<int>, std::size_t> derangement_cycle_types(int n) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::map<std::vector<int>, std::size_t> types;
  do {
    bool fixed = false;
    for (int i = 0; i < n; ++i) fixed = fixed || perm[static_cast<std::size_t>(i)] == i;
    if (fixed) continue;
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> lengths;
    for (int i = 0; i < n; ++i) {
      if (seen[static_cast<std::size_t>(i)]) continue;
      int len = 0;
      for (int j = i; !seen[static_cast<std::size_t>(j)]; j = perm[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        ++len;
      }
      lengths.push_back(len);
    }
    std::sort(lengths.begin(), lengths.end());
    ++types[lengths];
  } while (std::next_permutation(perm.begin(), perm.end()));
  return types;
}

// Sum over a_1..a_len of exp(beta^2 sum_j (a_j . a_{j+1} - a_j^2)) prod_j sinh(g k.(a_j - a_{j+1})),
// indices cyclic. This is the a-sum of one cycle of the permutation.
inline double cycle_factor(const std::vector<Vec2>& a, double beta2, double g, Vec2 k, int len) {
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(len), 0);
  double total = 0.0;
  for (;;) {
    double expo = 0.0;
    double prod = 1.0;
    for (int j = 0; j < len; ++j) {
      const Vec2 aj = a[idx[static_cast<std::size_t>(j)]];
      const Vec2 an = a[idx[static_cast<std::size_t>((j + 1) % len)]];
      expo += dot(aj, an) - norm_sq(aj);
      prod *= std::sinh(g * dot(k, aj - an));
    }
    total += std::exp(beta2 * expo) * prod;
    int pos = 0;
    while (pos < len && ++idx[static_cast<std::size_t>(pos)] == n) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == len) break;
  }
  return total;
}

inline std::string cycle_label(const std::vector<int>& lengths) {
  std::string s;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (i) s += '+';
    s += std::to_string(lengths[i]);
  }
  return s;
}

}  // namespace internal

/// Exact phase-ensemble moment <G^n> of the continuum Gabor coefficient for a
/// small lattice source, summed over fixed-point-free permutations and all
/// region tuples. Each permutation's a-sum factorises over its cycles.
inline BruteForceMoment brute_force_moment(int n, const SourceGeometry& geometry, const GaborProbe& probe) {
  detail::require(n >= 1 && n <= 6, "brute_force_moment supports 1 <= n <= 6");
  detail::require(probe.w > 0.0, "w must be > 0");
  const double N = static_cast<double>(geometry.region_count());
  const double terms = std::pow(N, n);
  if (terms > kEnumerationBudget) {
    throw ResourceError("enumeration of " + std::to_string(terms) + " region tuples exceeds the budget of 1e9");
  }
  const double M = geometry.speckle_scale();
  const double R = geometry.radius();
  const double beta2 = probe.w * probe.w / (M * M * R * R);
  const double g = probe.w * probe.w / (M * R);
  // Source positions relative to the observation point x0 enter through the
  // phase factor only, which cancels around every cycle, so x0 drops out.
  std::vector<Vec2> a;
  for (Site s : geometry.sites()) a.push_back(geometry.position(s));

  const double scale = geometry.wavelength() * geometry.wavelength() / (geometry.distance() * geometry.distance());
  const double k2 = norm_sq(probe.k);
  std::complex<double> prefactor = std::pow(std::complex<double>(0.0, scale), n) *
                                   std::exp(-0.5 * n * probe.w * probe.w * k2);

  BruteForceMoment out;
  out.terms = terms;
  std::map<int, double> cache;
  double real_sum = 0.0;
  for (const auto& [lengths, count] : internal::derangement_cycle_types(n)) {
    double prod = 1.0;
    for (int len : lengths) {
      auto it = cache.find(len);
      if (it == cache.end()) it = cache.emplace(len, internal::cycle_factor(a, beta2, g, probe.k, len)).first;
      prod *= it->second;
    }
    const std::complex<double> c = prefactor * (static_cast<double>(count) * prod);
    out.by_cycle_type.push_back({internal::cycle_label(lengths), count, c.real()});
    real_sum += static_cast<double>(count) * prod;
  }
  const std::complex<double> total = prefactor * real_sum;
  out.value = total.real();
  out.imaginary_part = total.imag();
  return out;
}

/// Matrix K with G = sum_ab alpha_a conj(alpha_b) K_ab for the continuum Gabor
/// coefficient; row-major N x N.
inline std::vector<std::complex<double>> gabor_kernel_matrix(const SourceGeometry& geometry, const GaborProbe& probe) {
  const auto sites = geometry.sites();
  const std::size_t N = sites.size();
  const double lz = geometry.wavelength() * geometry.distance();
  const double scale = geometry.wavelength() * geometry.wavelength() / (geometry.distance() * geometry.distance());
  const double w2 = probe.w * probe.w;
  const double k2 = norm_sq(probe.k);
  std::vector<std::complex<double>> K(N * N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec2 a = geometry.position(sites[i]);
    for (std::size_t j = 0; j < N; ++j) {
      const Vec2 b = geometry.position(sites[j]);
      const Vec2 q = (a - b) * (2.0 * std::numbers::pi / lz);
      const double phase = std::numbers::pi * (norm_sq(b) - norm_sq(a)) / lz + dot(q, probe.x0);
      const double mag = scale * std::exp(-0.5 * (norm_sq(q) + k2) * w2) * std::sinh(w2 * dot(q, probe.k));
      K[i * N + j] = std::complex<double>(0.0, mag) * std::polar(1.0, phase);
    }
  }
  return K;
}

/// G for one set of source phasors, from the kernel matrix.
inline double gabor_from_kernel(const std::vector<std::complex<double>>& K, const std::vector<std::complex<double>>& alpha) {
  const std::size_t N = alpha.size();
  std::complex<double> g = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    std::complex<double> row = 0.0;
    for (std::size_t j = 0; j < N; ++j) row += K[i * N + j] * std::conj(alpha[j]);
    g += alpha[i] * row;
  }
  return g.real();
}

/// <G^2> = tr(K^2) over the uniform phase ensemble.
inline double second_moment_from_kernel(const std::vector<std::complex<double>>& K, std::size_t N) {
  std::complex<double> tr = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) tr += K[i * N + j] * K[j * N + i];
  return tr.real();
}

}  // namespace speckle::theory

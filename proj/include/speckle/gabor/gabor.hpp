#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "speckle/core/parallel.hpp"
#include "speckle/core/propagation.hpp"
#include "speckle/core/types.hpp"

namespace speckle::gabor {

/// Envelope truncation radius in units of w.
inline constexpr double kEnvelopeRadius = 4.0;

/// One Gabor basis function; pixel units, x0 in (col, row) coordinates with
/// pixel centers on integers.
struct GaborParams {
  double w = 1.0;
  Vec2 k{};
  Vec2 x0{};

  static GaborParams create(double w, Vec2 k, Vec2 x0) {
    GaborParams p{w, k, x0};
    p.validate();
    return p;
  }
  void validate() const {
    detail::require(w > 0.0 && std::isfinite(w), "Gabor width w must be > 0");
    detail::require(norm(k) > 0.0 && std::isfinite(norm(k)), "Gabor wave vector must be nonzero");
  }
};

/// Precomputed weights of Gamma_IM on the pixels within 4w of a center.
struct Stencil {
  int dx_min = 0, dx_max = 0, dy_min = 0, dy_max = 0;
  std::vector<int> dx, dy;
  std::vector<double> weight;
};

namespace internal {

// Offsets are relative to the pixel floor(x0); frac = x0 - floor(x0).
inline Stencil make_stencil(double w, Vec2 k, Vec2 frac) {
  Stencil s;
  const double rmax = kEnvelopeRadius * w;
  const int reach = static_cast<int>(std::ceil(rmax)) + 1;
  const double norm_factor = 1.0 / (2.0 * std::numbers::pi * w * w);
  s.dx_min = s.dy_min = reach;
  s.dx_max = s.dy_max = -reach;
  std::vector<double> envelope;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const Vec2 u{dx - frac.x, dy - frac.y};
      const double r2 = norm_sq(u);
      if (r2 > rmax * rmax) continue;
      s.dx.push_back(dx);
      s.dy.push_back(dy);
      envelope.push_back(std::exp(-r2 / (2.0 * w * w)));
      s.weight.push_back(norm_factor * std::sin(dot(k, u)) * envelope.back());
      s.dx_min = std::min(s.dx_min, dx);
      s.dx_max = std::max(s.dx_max, dx);
      s.dy_min = std::min(s.dy_min, dy);
      s.dy_max = std::max(s.dy_max, dy);
    }
  }
  // A truncated stencil off the pixel lattice is not exactly odd, so it picks up
  // a trace of any constant background. Remove its envelope component.
  double wsum = 0.0, esum = 0.0;
  for (std::size_t i = 0; i < envelope.size(); ++i) {
    wsum += s.weight[i];
    esum += envelope[i];
  }
  for (std::size_t i = 0; i < envelope.size(); ++i) s.weight[i] -= wsum / esum * envelope[i];
  return s;
}

inline std::pair<Vec2, Vec2> split_center(Vec2 x0) {
  const Vec2 base{std::floor(x0.x), std::floor(x0.y)};
  return {base, x0 - base};
}

inline double apply_stencil(const IntensityMap& map, const Stencil& s, int cx, int cy) {
  if (cx + s.dx_min < 0 || cy + s.dy_min < 0 || cx + s.dx_max >= map.width() || cy + s.dy_max >= map.height()) {
    throw InvalidArgument("Gabor support (radius 4w) is clipped by the image border");
  }
  const auto v = map.values();
  const std::size_t W = static_cast<std::size_t>(map.width());
  double sum = 0.0;
  for (std::size_t i = 0; i < s.weight.size(); ++i) {
    sum += s.weight[i] * v[static_cast<std::size_t>(cy + s.dy[i]) * W + static_cast<std::size_t>(cx + s.dx[i])];
  }
  return sum;
}

}  // namespace internal

/// Midpoint-rule G(w, k, x0) with unit pixel area and the envelope cut at 4w;
/// the weights sum to zero.
inline double gabor_coefficient(const IntensityMap& map, const GaborParams& p) {
  p.validate();
  const auto [base, frac] = internal::split_center(p.x0);
  const auto s = internal::make_stencil(p.w, p.k, frac);
  return internal::apply_stencil(map, s, static_cast<int>(base.x), static_cast<int>(base.y));
}

/// Lattice of Gabor centers with two perpendicular wave vectors of equal length.
/// Centers are spaced ell apart, kept ceil(4w) pixels from the border and
/// centered in the remaining span.
struct GaborGrid {
  double w = 1.0;
  double k_mag = 1.0;
  double psi1 = 0.0;
  double ell = 1.0;
  int width = 0;
  int height = 0;

  static GaborGrid create(double w, double k_mag, double psi1, double ell, int width, int height) {
    GaborGrid g{w, k_mag, psi1, ell, width, height};
    g.validate();
    return g;
  }

  void validate() const {
    detail::require(w > 0.0 && k_mag > 0.0, "Gabor grid needs w > 0 and |k| > 0");
    detail::require(ell >= 1.0, "lattice pitch ell must be >= 1 pixel");
    detail::require(width >= ell && height >= ell, "image extent L must be >= ell");
    detail::require(count_x() >= 1 && count_y() >= 1, "image too small for a lattice point 4w from the border");
  }

  int margin() const { return static_cast<int>(std::ceil(kEnvelopeRadius * w)); }
  int count_along(int extent) const {
    const double span = extent - 1 - 2.0 * margin();
    return span < 0.0 ? 0 : static_cast<int>(std::floor(span / ell + 1e-9)) + 1;
  }
  int count_x() const { return count_along(width); }
  int count_y() const { return count_along(height); }
  std::size_t points() const { return static_cast<std::size_t>(count_x()) * static_cast<std::size_t>(count_y()); }

  double start_along(int extent, int n) const {
    return margin() + std::floor(0.5 * (extent - 1 - 2.0 * margin() - (n - 1) * ell));
  }
  /// Center of lattice point (ix, iy), pixel coordinates.
  Vec2 center(int ix, int iy) const {
    return {start_along(width, count_x()) + ix * ell, start_along(height, count_y()) + iy * ell};
  }
  /// Wave vector of direction 0 (psi1) or 1 (psi1 + 90 degrees).
  Vec2 k(int direction) const { return polar_vec(k_mag, psi1 + direction * 0.5 * std::numbers::pi); }

  bool operator==(const GaborGrid&) const = default;
};

/// Coefficients per direction, row-major over the lattice (iy * nx + ix).
struct GaborMap {
  GaborGrid grid;
  std::vector<double> coefficients[2];

  double at(int direction, int ix, int iy) const {
    return coefficients[direction][static_cast<std::size_t>(iy) * grid.count_x() + ix];
  }
};

inline GaborMap gabor_map(const IntensityMap& map, const GaborGrid& grid, unsigned threads = 0) {
  grid.validate();
  if (grid.width != map.width() || grid.height != map.height()) {
    throw InvalidArgument("Gabor grid extent does not match the image");
  }
  const int nx = grid.count_x(), ny = grid.count_y();
  GaborMap out{grid, {}};
  for (int d = 0; d < 2; ++d) {
    out.coefficients[d].assign(grid.points(), 0.0);
    // One stencil per distinct fractional center offset.
    std::map<std::pair<double, double>, Stencil> stencils;
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        const Vec2 frac = internal::split_center(grid.center(ix, iy)).second;
        const auto key = std::pair{frac.x, frac.y};
        if (!stencils.contains(key)) stencils.emplace(key, internal::make_stencil(grid.w, grid.k(d), frac));
      }
    }
    parallel::parallel_for(
        static_cast<std::size_t>(ny),
        [&](std::size_t iy) {
          for (int ix = 0; ix < nx; ++ix) {
            const auto [base, frac] = internal::split_center(grid.center(ix, static_cast<int>(iy)));
            const auto& s = stencils.at({frac.x, frac.y});
            out.coefficients[d][iy * static_cast<std::size_t>(nx) + static_cast<std::size_t>(ix)] =
                internal::apply_stencil(map, s, static_cast<int>(base.x), static_cast<int>(base.y));
          }
        },
        threads);
  }
  return out;
}

/// Robust bits: mask marks |G| > T, bit is G > 0 there (0 elsewhere).
/// Layout is direction-major, then row-major over the lattice.
struct RobustBitstring {
  GaborGrid grid;
  double threshold = 0.0;
  std::vector<std::uint8_t> bits;
  std::vector<std::uint8_t> mask;

  std::size_t size() const { return bits.size(); }
  std::size_t robust_count() const {
    std::size_t n = 0;
    for (auto m : mask) n += m;
    return n;
  }
};

inline RobustBitstring binarize(const GaborMap& gmap, double T) {
  detail::require(T >= 0.0 && !std::isnan(T), "threshold T must be >= 0");
  RobustBitstring out{gmap.grid, T, {}, {}};
  for (int d = 0; d < 2; ++d) {
    for (double g : gmap.coefficients[d]) {
      const bool robust = std::abs(g) > T;
      out.mask.push_back(robust ? 1 : 0);
      out.bits.push_back(robust && g > 0.0 ? 1 : 0);
    }
  }
  return out;
}

struct BitErrors {
  std::size_t errors = 0;
  std::size_t robust = 0;
  double rate = 0.0;
};

/// Fraction of enrolled robust positions whose sign differs in the probe map.
inline BitErrors bit_error_rate(const RobustBitstring& enrolled, const GaborMap& probe) {
  if (!(enrolled.grid == probe.grid)) throw InvalidArgument("enrolled bitstring and probe use different Gabor grids");
  const std::size_t n = probe.grid.points();
  detail::require(enrolled.bits.size() == 2 * n && enrolled.mask.size() == 2 * n, "bitstring size mismatch");
  BitErrors out;
  for (int d = 0; d < 2; ++d) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = static_cast<std::size_t>(d) * n + i;
      if (!enrolled.mask[j]) continue;
      ++out.robust;
      const bool probe_bit = probe.coefficients[d][i] > 0.0;
      if (probe_bit != static_cast<bool>(enrolled.bits[j])) ++out.errors;
    }
  }
  if (out.robust == 0) throw InvalidArgument("enrolled bitstring has no robust positions");
  out.rate = static_cast<double>(out.errors) / static_cast<double>(out.robust);
  return out;
}

}  // namespace speckle::gabor

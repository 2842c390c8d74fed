#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "speckle/core/fft.hpp"
#include "speckle/core/geometry.hpp"
#include "speckle/core/parallel.hpp"
#include "speckle/core/source.hpp"
#include "speckle/core/types.hpp"

namespace speckle {

/// Detected intensities, row-major (index = row * width + col).
class IntensityMap {
 public:
  IntensityMap(DetectorGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    grid_.validate();
    detail::require(values_.size() == grid_.pixel_count(), "value count must match grid");
    for (double v : values_) detail::require(v >= 0.0 && std::isfinite(v), "intensities must be finite and >= 0");
  }

  const DetectorGrid& grid() const { return grid_; }
  int width() const { return grid_.width; }
  int height() const { return grid_.height; }
  std::span<const double> values() const { return values_; }
  double at(int col, int row) const {
    return values_[static_cast<std::size_t>(row) * grid_.width + col];
  }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

 private:
  DetectorGrid grid_;
  std::vector<double> values_;
};

/// Complex detection-plane amplitude, row-major like IntensityMap.
struct ComplexField {
  DetectorGrid grid;
  std::vector<std::complex<double>> values;

  std::complex<double> at(int col, int row) const {
    return values[static_cast<std::size_t>(row) * grid.width + col];
  }
};

enum class RenderMethod { Direct, Fft };

inline std::string to_string(RenderMethod m) { return m == RenderMethod::Direct ? "direct" : "fft"; }

inline RenderMethod parse_render_method(const std::string& s) {
  if (s == "direct") return RenderMethod::Direct;
  if (s == "fft") return RenderMethod::Fft;
  throw InvalidArgument("unknown render method '" + s + "' (expected direct or fft)");
}

struct RenderOptions {
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
  unsigned threads = 0;
};

/// Fresnel sum (lambda/z) sum_a exp(i phi_a) exp(-i pi (x-a)^2 / (lambda z)), term by term.
inline std::complex<double> amplitude_at(const SpeckleSource& source, Vec2 x) {
  const auto& g = source.geometry();
  const double lz = g.wavelength() * g.distance();
  const auto sites = g.sites();
  const auto phases = source.phases();
  std::complex<double> sum = 0.0;
  for (std::size_t a = 0; a < sites.size(); ++a) {
    const Vec2 d = x - g.position(sites[a]);
    sum += std::polar(1.0, phases[a] - std::numbers::pi * norm_sq(d) / lz);
  }
  return sum * (g.wavelength() / g.distance());
}

namespace detail {

inline double wrapped(double arg) { return std::remainder(arg, 2.0 * std::numbers::pi); }

// exp(-i pi (x - i d)^2 / (lambda z)) for each detector coordinate x and site index i in [-h, h].
inline std::vector<std::complex<double>> axis_table(double start, double step, int count, int h,
                                                    double pitch, double lz) {
  const int n = 2 * h + 1;
  std::vector<std::complex<double>> t(static_cast<std::size_t>(count) * n);
  for (int c = 0; c < count; ++c) {
    const double x = start + c * step;
    for (int i = -h; i <= h; ++i) {
      const double d = x - i * pitch;
      t[static_cast<std::size_t>(c) * n + (i + h)] = std::polar(1.0, -wrapped(std::numbers::pi * d * d / lz));
    }
  }
  return t;
}

inline ComplexField render_direct(const SpeckleSource& source, const DetectorGrid& grid,
                                  const RenderOptions& opt) {
  const auto& g = source.geometry();
  const double lz = g.wavelength() * g.distance();
  const int h = g.half_extent();
  const int n = 2 * h + 1;
  const Vec2 first = grid.position(0, 0);
  const auto tx = axis_table(first.x, grid.pixel_pitch, grid.width, h, g.region_pitch(), lz);
  const auto ty = axis_table(first.y, grid.pixel_pitch, grid.height, h, g.region_pitch(), lz);
  const auto sites = g.sites();
  const auto alpha = source.phasors();
  const double scale = g.wavelength() / g.distance();

  ComplexField out{grid, std::vector<std::complex<double>>(grid.pixel_count())};
  parallel::parallel_for(
      static_cast<std::size_t>(grid.height),
      [&](std::size_t r) {
        const std::complex<double>* ey = &ty[r * n];
        for (int c = 0; c < grid.width; ++c) {
          const std::complex<double>* ex = &tx[static_cast<std::size_t>(c) * n];
          std::complex<double> sum = 0.0;
          for (std::size_t a = 0; a < sites.size(); ++a) {
            sum += alpha[a] * ex[sites[a].i + h] * ey[sites[a].j + h];
          }
          out.values[r * grid.width + c] = sum * scale;
        }
      },
      opt.threads);
  return out;
}

inline ComplexField render_fft(const SpeckleSource& source, const DetectorGrid& grid,
                               const RenderOptions& opt) {
  const auto& g = source.geometry();
  const double lz = g.wavelength() * g.distance();
  const double d = g.region_pitch();
  const double step = grid.pixel_pitch;
  const int h = g.half_extent();
  const std::size_t n = static_cast<std::size_t>(2 * h + 1);
  const std::size_t W = static_cast<std::size_t>(grid.width);
  const std::size_t H = static_cast<std::size_t>(grid.height);

  const std::size_t bytes = n * W * sizeof(std::complex<double>) +
                            2 * W * H * sizeof(std::complex<double>) +
                            fft::ChirpZ::footprint(n, W) + fft::ChirpZ::footprint(n, H);
  if (bytes > opt.memory_budget_bytes) {
    throw ResourceError("fft propagation needs " + std::to_string(bytes) +
                        " bytes, above the memory budget of " + std::to_string(opt.memory_budget_bytes));
  }

  const double pi = std::numbers::pi;
  const double theta = wrapped(2.0 * pi * step * d / lz);
  const Vec2 first = grid.position(0, 0);

  // beta_a = alpha_a exp(-i pi |a|^2 / (lambda z)), then the x-offset factor of the row pass.
  std::vector<std::complex<double>> gamma(n * n, 0.0);
  const auto sites = g.sites();
  const auto phases = source.phases();
  for (std::size_t a = 0; a < sites.size(); ++a) {
    const Vec2 p = g.position(sites[a]) - g.lattice_offset();
    const double arg = phases[a] - pi * norm_sq(p) / lz + 2.0 * pi * first.x * p.x / lz;
    gamma[static_cast<std::size_t>(sites[a].j + h) * n + (sites[a].i + h)] = std::polar(1.0, wrapped(arg));
  }

  std::vector<std::complex<double>> col_shift(W), row_shift(H);
  for (std::size_t c = 0; c < W; ++c) col_shift[c] = std::polar(1.0, -wrapped(theta * static_cast<double>(c) * h));
  for (std::size_t r = 0; r < H; ++r) row_shift[r] = std::polar(1.0, -wrapped(theta * static_cast<double>(r) * h));
  std::vector<std::complex<double>> y_offset(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double j = static_cast<double>(static_cast<int>(m) - h);
    y_offset[m] = std::polar(1.0, wrapped(2.0 * pi * first.y * j * d / lz));
  }

  // Row pass: one transform per source row j, over i -> detector column.
  fft::ChirpZ row_cz(n, W, theta);
  std::vector<std::complex<double>> rows(n * W);
  parallel::parallel_for(
      n,
      [&](std::size_t jj) {
        auto ws = row_cz.workspace();
        std::span<std::complex<double>> out(&rows[jj * W], W);
        row_cz.apply(std::span<const std::complex<double>>(&gamma[jj * n], n), out, ws);
        for (std::size_t c = 0; c < W; ++c) out[c] *= col_shift[c] * y_offset[jj];
      },
      opt.threads);

  // Column pass: per detector column, over j -> detector row.
  fft::ChirpZ col_cz(n, H, theta);
  ComplexField field{grid, std::vector<std::complex<double>>(W * H)};
  const double scale = g.wavelength() / g.distance();
  parallel::parallel_for(
      W,
      [&](std::size_t c) {
        auto ws = col_cz.workspace();
        std::vector<std::complex<double>> in(n), out(H);
        for (std::size_t jj = 0; jj < n; ++jj) in[jj] = rows[jj * W + c];
        col_cz.apply(in, out, ws);
        const double x = first.x + static_cast<double>(c) * step;
        for (std::size_t r = 0; r < H; ++r) {
          const double y = first.y + static_cast<double>(r) * step;
          const double chirp = -wrapped(pi * (x * x + y * y) / lz);
          field.values[r * W + c] = out[r] * row_shift[r] * std::polar(scale, chirp);
        }
      },
      opt.threads);
  return field;
}

}  // namespace detail

inline ComplexField render_amplitude(const SpeckleSource& source, const DetectorGrid& grid,
                                     RenderMethod method = RenderMethod::Fft,
                                     const RenderOptions& options = {}) {
  grid.validate();
  // Both renderers work on the integer lattice; a staggered one is the same
  // lattice translated, which moves the detector grid the other way.
  DetectorGrid shifted = grid;
  shifted.origin = grid.origin - source.geometry().lattice_offset();
  ComplexField f = method == RenderMethod::Direct ? detail::render_direct(source, shifted, options)
                                                  : detail::render_fft(source, shifted, options);
  f.grid = grid;
  return f;
}

inline IntensityMap intensity_of(const ComplexField& field) {
  std::vector<double> v(field.values.size());
  for (std::size_t p = 0; p < v.size(); ++p) v[p] = std::norm(field.values[p]);
  return IntensityMap(field.grid, std::move(v));
}

inline IntensityMap render_intensity(const SpeckleSource& source, const DetectorGrid& grid,
                                     RenderMethod method = RenderMethod::Fft,
                                     const RenderOptions& options = {}) {
  return intensity_of(render_amplitude(source, grid, method, options));
}

}  // namespace speckle

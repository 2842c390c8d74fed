#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "speckle/core/geometry.hpp"
#include "speckle/core/parallel.hpp"
#include "speckle/core/propagation.hpp"
#include "speckle/core/random.hpp"
#include "speckle/core/source.hpp"
#include "speckle/gabor/gabor.hpp"

namespace speckle::mc {

/// (w, k) grid for the sigma_G scan; w in units of M, k as the product w k.
struct GaborScan {
  std::vector<double> w_over_M{0.7, 1.7, 3.3};
  std::vector<double> wk{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  double tolerance = 0.05;
  int max_side = 512;
};

struct EnsembleConfig {
  SourceGeometry geometry;
  DetectorGrid grid;
  /// Pixel units on `grid`.
  ::speckle::gabor::GaborGrid gabor;
  std::size_t trials = 2;
  std::uint64_t base_seed = 1;
  std::vector<double> q_list;
  /// Thresholds in units of sigma_G.
  std::vector<double> T_list;
  GaborScan scan;
  /// Separations for C_I, in units of M.
  std::vector<double> intensity_offsets_M{0.5, 1.0, 2.0, 3.0};
  unsigned threads = 0;

  void validate() const {
    detail::require(trials >= 2, "ensemble needs trials >= 2");
    for (double q : q_list) detail::require(q >= 0.0 && q <= std::numbers::pi, "every q must lie in [0, pi]");
    for (double T : T_list) detail::require(T >= 0.0, "thresholds must be >= 0");
    detail::require(gabor.width == grid.width && gabor.height == grid.height,
                    "Gabor grid extent must match the detector grid");
    gabor.validate();
    for (double r : scan.w_over_M) detail::require(r > 0.0, "scan w/M must be > 0");
    for (double r : scan.wk) detail::require(r > 0.0, "scan w k must be > 0");
    detail::require(scan.tolerance > 0.0, "scan tolerance must be > 0");
  }

  /// Speckle scale in pixels.
  double M_pixels() const { return geometry.speckle_scale() / grid.pixel_pitch; }
  std::uint64_t seed(std::size_t trial) const { return rng::trial_seed(base_seed, trial); }
};

/// Desk-scale defaults: 780 nm, about 2000 regions, z = 8000 lambda, M = 4 pixels
/// on a 384^2 grid, Gabor w = 5M, w k = 1.5, ell = w / 2.
inline EnsembleConfig desk_config(std::size_t trials = 60, std::uint64_t seed = 1) {
  constexpr double lambda = 780e-9;
  auto geometry = SourceGeometry::create(lambda, lambda * std::sqrt(2000.0 / std::numbers::pi), 8000.0 * lambda);
  const auto grid = DetectorGrid::create(384, 384, geometry.speckle_scale() / 4.0);
  const double w = 20.0;
  return EnsembleConfig{geometry,
                        grid,
                        gabor::GaborGrid::create(w, 1.5 / w, 0.0, 0.5 * w, grid.width, grid.height),
                        trials,
                        seed,
                        {0.0, 0.5, 1.0, 2.0, std::numbers::pi},
                        {0.0, 1.0, 2.0},
                        GaborScan{}};
}

/// Runs fn(t) for every trial into its own slot.
template <class R, class Fn>
std::vector<R> run_trials(std::size_t n, unsigned threads, Fn&& fn) {
  std::vector<R> out(n);
  parallel::parallel_for(n, [&](std::size_t t) { out[t] = fn(t); }, threads);
  return out;
}

inline RenderOptions single_thread() {
  RenderOptions o;
  o.threads = 1;
  return o;
}

inline IntensityMap render_on(const SpeckleSource& s, const DetectorGrid& g) {
  return render_intensity(s, g, RenderMethod::Fft, single_thread());
}

}  // namespace speckle::mc

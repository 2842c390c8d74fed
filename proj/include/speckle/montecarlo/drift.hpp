#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "speckle/core/random.hpp"
#include "speckle/core/source.hpp"
#include "speckle/ingest/analysis.hpp"
#include "speckle/montecarlo/ensemble.hpp"
#include "speckle/montecarlo/report.hpp"
#include "speckle/theory/perturbation.hpp"

namespace speckle::mc {

/// Camera model and random walk for a simulated drift sequence.
struct DriftOptions {
  std::size_t images = 12;
  /// Each capture perturbs the previous source by a uniform (-q_step, q_step] shift.
  double q_step = 0.35;
  /// Gray levels per I_av.
  double gain = 40.0;
  /// Detector noise, gray levels (sd per pixel).
  double noise_sd = 0.0;
  /// Constant background, gray levels.
  double pedestal = 0.0;
  std::uint64_t seed = 1;
};

/// Random-walk captures rendered, scaled, noised and quantized to 8 bits.
inline ingest::DriftSequence simulate_drift(const SourceGeometry& geometry, const DetectorGrid& grid,
                                            const DriftOptions& o, unsigned threads = 0) {
  detail::require(o.images >= 2, "drift sequence needs at least 2 images");
  detail::require(o.q_step >= 0.0 && o.q_step <= std::numbers::pi, "q_step must lie in [0, pi]");
  detail::require(o.gain > 0.0 && o.noise_sd >= 0.0, "gain must be > 0 and noise >= 0");
  std::vector<SpeckleSource> sources{new_source(geometry, o.seed)};
  for (std::size_t k = 1; k < o.images; ++k) {
    const PerturbationSpec spec{o.q_step, rng::key(o.seed, rng::Stream::Drift, static_cast<std::int64_t>(k))};
    sources.push_back(perturb(sources.back(), spec));
  }
  const double scale = o.gain / geometry.mean_intensity();
  std::vector<GrayImage> imgs(o.images);
  parallel::parallel_for(
      o.images,
      [&](std::size_t k) {
        const auto I = render_on(sources[k], grid);
        std::vector<std::uint8_t> px(I.values().size());
        for (std::size_t p = 0; p < px.size(); ++p) {
          double v = scale * I.values()[p] + o.pedestal;
          if (o.noise_sd > 0.0)
            v += o.noise_sd * rng::standard_normal(rng::key(o.seed, rng::Stream::Noise, static_cast<std::int64_t>(k),
                                                           static_cast<std::int64_t>(p)));
          px[p] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
        }
        imgs[k] = GrayImage::create(grid.width, grid.height, std::move(px));
      },
      threads);
  std::vector<double> ts;
  for (std::size_t k = 0; k < o.images; ++k) ts.push_back(1800.0 * static_cast<double>(k));
  return ingest::DriftSequence::create(std::move(imgs), std::move(ts));
}

/// Drift suite settings. The Gabor grid uses w = w_over_M * M and w k = wk.
struct DriftSuiteOptions {
  std::size_t sequences = 8;
  std::size_t images = 20;
  double q_step = 0.5;
  double gain = 40.0;
  double noise_sd = 20.0;
  double w_over_M = 2.0;
  double wk = 1.5;
};

inline gabor::GaborGrid drift_gabor(const EnsembleConfig& cfg, const DriftSuiteOptions& o) {
  const double w = o.w_over_M * cfg.M_pixels();
  return gabor::GaborGrid::create(w, o.wk / w, 0.0, std::ceil(0.5 * w), cfg.grid.width, cfg.grid.height);
}

/// Pooled noiseless regression slope over independent sequences, and the
/// noise-induced gap Xi_G - Xi_I on one noisy sequence.
inline ComparisonReport run_drift_suite(const EnsembleConfig& cfg, const DriftSuiteOptions& o = {}) {
  cfg.validate();
  detail::require(o.sequences >= 2, "drift suite needs at least 2 sequences");
  const auto gg = drift_gabor(cfg, o);
  auto options = [&](std::size_t s, double noise) {
    DriftOptions d;
    d.images = o.images;
    d.q_step = o.q_step;
    d.gain = o.gain;
    d.noise_sd = noise;
    d.pedestal = 4.0 * noise;
    d.seed = rng::key(cfg.base_seed, rng::Stream::Drift, static_cast<std::int64_t>(s), -1);
    return d;
  };
  const auto clean = run_trials<ingest::DriftResult>(o.sequences, cfg.threads, [&](std::size_t s) {
    return ingest::drift_analysis(simulate_drift(cfg.geometry, cfg.grid, options(s, 0.0), 1), gg, 1);
  });
  const auto noisy = ingest::drift_analysis(
      simulate_drift(cfg.geometry, cfg.grid, options(o.sequences, o.noise_sd), cfg.threads), gg, cfg.threads);

  // per-sequence sums n, x, y, xx, xy
  std::vector<std::vector<double>> sums;
  for (const auto& r : clean) {
    std::vector<double> s(5, 0.0);
    for (const auto& p : r.pairs) {
      s[0] += 1.0;
      s[1] += p.xi_I;
      s[2] += p.xi_G_pooled;
      s[3] += p.xi_I * p.xi_I;
      s[4] += p.xi_I * p.xi_G_pooled;
    }
    sums.push_back(std::move(s));
  }
  auto slope = [](std::span<const double> s) {
    return (s[4] - s[1] * s[2] / s[0]) / (s[3] - s[1] * s[1] / s[0]);
  };
  auto intercept = [&](std::span<const double> s) { return (s[2] - slope(s) * s[1]) / s[0]; };
  const double n_seq = static_cast<double>(o.sequences);

  ComparisonReport rep;
  rep.suite = "drift";
  rep.add(jackknife("slope_Xi_G_on_Xi_I(noiseless)", sums, slope, n_seq), 1.0, "Xi_G = Xi_I line", Check::Absolute,
          0.05);
  rep.add(jackknife("intercept_Xi_G_on_Xi_I(noiseless)", sums, intercept, n_seq), 0.0, "Xi_G = Xi_I line",
          Check::Info);
  std::vector<double> gap;
  double above = 0.0;
  for (const auto& p : noisy.pairs) {
    gap.push_back(p.xi_G_pooled - p.xi_I);
    above += p.xi_G_pooled > p.xi_I ? 1.0 : 0.0;
  }
  const double n_pairs = static_cast<double>(noisy.pairs.size());
  rep.add(mean_estimate("mean_Xi_G_minus_Xi_I(noisy)", gap, n_pairs), 0.0, "noise lowers Xi_I more than Xi_G",
          Check::Info);
  rep.add({"fraction_above_line(noisy)", above / n_pairs, 0.0, n_pairs}, 0.9, "noise lowers Xi_I more than Xi_G",
          Check::Above, 0.9);
  Table t{"drift_scatter", {"noise_sd", "sequence", "pair_i", "pair_j", "Xi_I", "Xi_G_dir1", "Xi_G_dir2", "Xi_G_pooled"}, {}};
  auto push = [&](const ingest::DriftResult& r, double noise, std::size_t s) {
    for (const auto& p : r.pairs)
      t.rows.push_back({noise, static_cast<double>(s), static_cast<double>(p.i), static_cast<double>(p.j), p.xi_I,
                        p.xi_G[0], p.xi_G[1], p.xi_G_pooled});
  };
  for (std::size_t s = 0; s < clean.size(); ++s) push(clean[s], 0.0, s);
  push(noisy, o.noise_sd, o.sequences);
  rep.tables.push_back(std::move(t));
  return rep;
}

}  // namespace speckle::mc

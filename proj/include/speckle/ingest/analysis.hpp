#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "speckle/core/parallel.hpp"
#include "speckle/core/propagation.hpp"
#include "speckle/core/types.hpp"
#include "speckle/gabor/correlation.hpp"
#include "speckle/gabor/gabor.hpp"
#include "speckle/ingest/pgm.hpp"

namespace speckle::ingest {

inline constexpr std::uint8_t kSaturated = 255;

/// Subtracts the image minimum from every pixel.
inline GrayImage normalize_floor(const GrayImage& img) {
  detail::require(!img.pixels.empty(), "image is empty");
  const auto lo = *std::min_element(img.pixels.begin(), img.pixels.end());
  GrayImage out = img;
  for (auto& v : out.pixels) v = static_cast<std::uint8_t>(v - lo);
  return out;
}

inline std::size_t saturated_count(const GrayImage& img) {
  return static_cast<std::size_t>(std::count(img.pixels.begin(), img.pixels.end(), kSaturated));
}

/// Linear gray-to-intensity map on a unit-pitch grid.
inline IntensityMap to_intensity(const GrayImage& img) {
  std::vector<double> v(img.pixels.begin(), img.pixels.end());
  return IntensityMap(DetectorGrid::create(img.width, img.height, 1.0), std::move(v));
}

/// Counts in bins [b w, (b+1) w) with the exponential fit
/// (1/I_av) exp(-I/I_av) integrated over each bin, I_av the sample mean.
struct Histogram {
  int bin_width = 1;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  std::size_t excluded_saturated = 0;
  double mean = 0.0;

  double lower_edge(std::size_t b) const { return static_cast<double>(b) * bin_width; }
  double upper_edge(std::size_t b) const { return static_cast<double>(b + 1) * bin_width; }
  /// Fitted count in bin b. Gray values are integers, so the continuous law is
  /// integrated over [lo - 1/2, hi - 1/2).
  double fitted_count(std::size_t b) const {
    if (mean <= 0.0) return b == 0 ? static_cast<double>(total) : 0.0;
    auto F = [&](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x / mean); };
    return static_cast<double>(total) * (F(upper_edge(b) - 0.5) - F(lower_edge(b) - 0.5));
  }
  std::size_t occupied_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  }
};

inline Histogram gray_histogram(const GrayImage& img, int bin_width, bool exclude_saturated = false) {
  detail::require(bin_width >= 1, "bin width must be >= 1");
  detail::require(!img.pixels.empty(), "image is empty");
  Histogram h;
  h.bin_width = bin_width;
  h.counts.assign(static_cast<std::size_t>(255 / bin_width + 1), 0);
  double sum = 0.0;
  for (auto v : img.pixels) {
    if (exclude_saturated && v == kSaturated) {
      ++h.excluded_saturated;
      continue;
    }
    ++h.counts[v / bin_width];
    ++h.total;
    sum += v;
  }
  detail::require(h.total > 0, "no pixels left after excluding saturated values");
  h.mean = sum / static_cast<double>(h.total);
  return h;
}

/// KS distance between the gray values and the exponential fit, evaluated at
/// every integer gray value with the same half-unit offset as the fit.
inline double histogram_ks(const GrayImage& img, bool exclude_saturated = false) {
  const auto h = gray_histogram(img, 1, exclude_saturated);
  double cum = 0.0, d = 0.0;
  for (std::size_t v = 0; v < h.counts.size(); ++v) {
    const double before = cum / static_cast<double>(h.total);
    cum += static_cast<double>(h.counts[v]);
    const double after = cum / static_cast<double>(h.total);
    const double F = h.mean > 0.0 ? -std::expm1(-(static_cast<double>(v) + 0.5) / h.mean) : 1.0;
    const double F0 = h.mean > 0.0 && v > 0 ? -std::expm1(-(static_cast<double>(v) - 0.5) / h.mean) : 0.0;
    d = std::max({d, std::abs(after - F), std::abs(before - F0)});
  }
  return d;
}

inline void write_histogram_csv(std::ostream& out, const Histogram& h) {
  out << "bin_lower,bin_upper,count,density,fit_count,fit_density\r\n" << std::setprecision(17);
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const double norm = static_cast<double>(h.total) * h.bin_width;
    out << h.lower_edge(b) << ',' << h.upper_edge(b) << ',' << h.counts[b] << ','
        << static_cast<double>(h.counts[b]) / norm << ',' << h.fitted_count(b) << ',' << h.fitted_count(b) / norm
        << "\r\n";
  }
}

/// Ordered captures of one token; timestamps in seconds.
struct DriftSequence {
  std::vector<GrayImage> images;
  std::vector<double> timestamps;

  static DriftSequence create(std::vector<GrayImage> images, std::vector<double> timestamps = {}) {
    detail::require(images.size() >= 2, "drift analysis needs at least 2 images");
    for (const auto& im : images) {
      if (im.width != images.front().width || im.height != images.front().height) {
        throw InvalidArgument("drift sequence images differ in size");
      }
    }
    if (timestamps.empty())
      for (std::size_t i = 0; i < images.size(); ++i) timestamps.push_back(static_cast<double>(i));
    detail::require(timestamps.size() == images.size(), "one timestamp per image");
    return {std::move(images), std::move(timestamps)};
  }
};

struct DriftPair {
  std::size_t i = 0, j = 0;
  double xi_I = 0.0;
  double xi_G[2] = {0.0, 0.0};
  double xi_G_pooled = 0.0;
};

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  std::size_t n = 0;
};

/// Least squares y = a + b x.
inline Regression linear_regression(const std::vector<double>& x, const std::vector<double>& y) {
  detail::require(x.size() == y.size() && x.size() >= 2, "regression needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("regression needs spread in x");
  Regression r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  r.n = x.size();
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - r.intercept - r.slope * x[i];
      rss += e * e;
    }
    r.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
  }
  return r;
}

struct DriftResult {
  gabor::GaborGrid grid;
  std::vector<DriftPair> pairs;
  /// Pooled Xi_G regressed on Xi_I.
  Regression fit;
};

/// Xi_I and Xi_G for every unordered pair (i < j), in (i, j) order.
inline DriftResult drift_analysis(const DriftSequence& seq, const gabor::GaborGrid& grid, unsigned threads = 0) {
  detail::require(seq.images.size() >= 2, "drift analysis needs at least 2 images");
  const auto& first = seq.images.front();
  for (const auto& im : seq.images) {
    if (im.width != first.width || im.height != first.height) throw InvalidArgument("drift sequence images differ in size");
  }
  if (grid.width != first.width || grid.height != first.height) {
    throw InvalidArgument("Gabor grid extent does not match the images");
  }
  const std::size_t n = seq.images.size();
  std::vector<std::optional<IntensityMap>> maps(n);
  std::vector<gabor::GaborMap> gmaps(n);
  parallel::parallel_for(
      n,
      [&](std::size_t i) {
        maps[i] = to_intensity(seq.images[i]);
        gmaps[i] = gabor::gabor_map(*maps[i], grid, 1);
      },
      threads);
  DriftResult out{grid, {}, {}};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.pairs.push_back({i, j, 0.0, {0.0, 0.0}, 0.0});
  parallel::parallel_for(
      out.pairs.size(),
      [&](std::size_t p) {
        auto& pr = out.pairs[p];
        pr.xi_I = gabor::empirical_correlation_intensity(*maps[pr.i], *maps[pr.j]);
        const auto g = gabor::empirical_correlation_gabor(gmaps[pr.i], gmaps[pr.j]);
        pr.xi_G[0] = g.direction[0];
        pr.xi_G[1] = g.direction[1];
        pr.xi_G_pooled = g.pooled;
      },
      threads);
  std::vector<double> x, y;
  for (const auto& pr : out.pairs) {
    x.push_back(pr.xi_I);
    y.push_back(pr.xi_G_pooled);
  }
  if (out.pairs.size() >= 2) {
    try {
      out.fit = linear_regression(x, y);
    } catch (const InvalidArgument&) {
      out.fit = {};
    }
  }
  return out;
}

inline void write_scatter_csv(std::ostream& out, const DriftResult& r) {
  out << "pair_i,pair_j,Xi_I,Xi_G_dir1,Xi_G_dir2\r\n" << std::setprecision(17);
  for (const auto& p : r.pairs)
    out << p.i << ',' << p.j << ',' << p.xi_I << ',' << p.xi_G[0] << ',' << p.xi_G[1] << "\r\n";
}

}  // namespace speckle::ingest

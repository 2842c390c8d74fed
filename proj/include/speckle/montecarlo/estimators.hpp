#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "speckle/core/types.hpp"

namespace speckle::mc {

struct EstimatorResult {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  double n_eff = 1.0;
};

/// Neumaier-compensated sum, accumulated in index order.
inline double stable_sum(std::span<const double> x) {
  double s = 0.0, c = 0.0;
  for (double v : x) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  return s + c;
}

inline double stable_mean(std::span<const double> x) {
  detail::require(!x.empty(), "mean of an empty sample");
  return stable_sum(x) / static_cast<double>(x.size());
}

/// Mean of independent per-trial values with the usual standard error.
inline EstimatorResult mean_estimate(const std::string& name, std::span<const double> x, double n_eff = 0.0) {
  detail::require(x.size() >= 2, name + ": need at least 2 trials");
  const double n = static_cast<double>(x.size());
  const double m = stable_mean(x);
  std::vector<double> d2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d2[i] = (x[i] - m) * (x[i] - m);
  const double var = stable_sum(d2) / (n - 1.0);
  return {name, m, std::sqrt(var / n), std::max(1.0, n_eff > 0.0 ? n_eff : n)};
}

/// Delete-one jackknife over trials for a statistic of per-trial sums.
/// sums[t] holds the trial's contribution to each accumulated column; stat maps
/// column totals to the estimate.
inline EstimatorResult jackknife(const std::string& name, const std::vector<std::vector<double>>& sums,
                                 const std::function<double(std::span<const double>)>& stat,
                                 double n_eff = 0.0) {
  const std::size_t n = sums.size();
  detail::require(n >= 2, name + ": need at least 2 trials");
  const std::size_t cols = sums.front().size();
  std::vector<double> total(cols);
  std::vector<double> column(n);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t t = 0; t < n; ++t) column[t] = sums[t][c];
    total[c] = stable_sum(column);
  }
  const double full = stat(total);
  std::vector<double> loo(n), part(cols);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t c = 0; c < cols; ++c) part[c] = total[c] - sums[t][c];
    loo[t] = stat(part);
  }
  const double m = stable_mean(loo);
  std::vector<double> d2(n);
  for (std::size_t t = 0; t < n; ++t) d2[t] = (loo[t] - m) * (loo[t] - m);
  const double var = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * stable_sum(d2);
  return {name, full, std::sqrt(var), std::max(1.0, n_eff > 0.0 ? n_eff : static_cast<double>(n))};
}

/// Kolmogorov-Smirnov distance of a sample to the exponential law with the given mean.
inline double ks_distance_exponential(std::vector<double> x, double mean) {
  detail::require(!x.empty() && mean > 0.0, "KS distance needs a sample and a positive mean");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = -std::expm1(-x[i] / mean);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
  }
  return d;
}

/// Effective sample count of n pixels whose correlation area is pi M^2.
inline double effective_pixels(double n_pixels, double pixel_area, double M) {
  return std::max(1.0, n_pixels * pixel_area / (std::numbers::pi * M * M));
}

}  // namespace speckle::mc

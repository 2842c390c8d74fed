#pragma once

#include <cmath>
#include <span>

#include "speckle/core/propagation.hpp"
#include "speckle/core/types.hpp"
#include "speckle/gabor/gabor.hpp"

namespace speckle::gabor {

/// Empirical Pearson correlation with population (1/N) moments.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size() && !a.empty(), "correlation needs equal, nonempty samples");
  const double n = static_cast<double>(a.size());
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  // Centered sums; algebraically the same moments, better conditioned.
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) throw InvalidArgument("correlation undefined: zero variance");
  return sab / std::sqrt(saa * sbb);
}

/// Xi_I over all pixels.
inline double empirical_correlation_intensity(const IntensityMap& A, const IntensityMap& B) {
  if (!(A.grid() == B.grid())) throw InvalidArgument("intensity maps have different grids");
  return pearson(A.values(), B.values());
}

struct GaborCorrelation {
  double direction[2] = {0.0, 0.0};
  /// Both directions taken as one sample.
  double pooled = 0.0;
};

/// Xi_G per direction and pooled.
inline GaborCorrelation empirical_correlation_gabor(const GaborMap& A, const GaborMap& B) {
  if (!(A.grid == B.grid)) throw InvalidArgument("Gabor maps have different grids");
  GaborCorrelation out;
  for (int d = 0; d < 2; ++d) out.direction[d] = pearson(A.coefficients[d], B.coefficients[d]);
  std::vector<double> a(A.coefficients[0]), b(B.coefficients[0]);
  a.insert(a.end(), A.coefficients[1].begin(), A.coefficients[1].end());
  b.insert(b.end(), B.coefficients[1].begin(), B.coefficients[1].end());
  out.pooled = pearson(a, b);
  return out;
}

}  // namespace speckle::gabor

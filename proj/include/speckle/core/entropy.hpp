#pragma once

#include <cmath>
#include <numbers>

#include "speckle/core/geometry.hpp"
#include "speckle/core/types.hpp"

namespace speckle {

/// N_reg log2(4 pi sqrt(N0)): phase entropy of the whole source.
inline double source_entropy_bits(const SourceGeometry& geometry, const PhotonBudget& budget) {
  return static_cast<double>(geometry.region_count()) *
         std::log2(4.0 * std::numbers::pi * std::sqrt(budget.photons_per_region()));
}

inline double entropy_bits_per_region(const PhotonBudget& budget) {
  return std::log2(4.0 * std::numbers::pi * std::sqrt(budget.photons_per_region()));
}

/// Entropy of the perturbation itself, N_reg log2(2q / dphi).
inline double perturbation_entropy_bits(const SourceGeometry& geometry, const PhotonBudget& budget,
                                        double q) {
  const double dphi = budget.phase_resolution();
  detail::require(q >= 0.5 * dphi && q <= std::numbers::pi,
                  "q must lie in [dphi/2, pi]");
  return static_cast<double>(geometry.region_count()) * std::log2(2.0 * q / dphi);
}

/// Mutual information between original and perturbed source phases, N_reg log2(pi / q).
inline double source_mutual_information_bits(const SourceGeometry& geometry,
                                             const PhotonBudget& budget, double q) {
  const double dphi = budget.phase_resolution();
  detail::require(q >= 0.5 * dphi, "q is below the phase uncertainty limit dphi/2");
  detail::require(q <= std::numbers::pi, "q must not exceed pi");
  return static_cast<double>(geometry.region_count()) * std::log2(std::numbers::pi / q);
}

}  // namespace speckle

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "speckle/core/geometry.hpp"
#include "speckle/core/random.hpp"
#include "speckle/core/types.hpp"

namespace speckle {

/// Reduce an angle to (-pi, pi].
inline double wrap_phase(double phi) {
  constexpr double pi = std::numbers::pi;
  if (phi > -pi && phi <= pi) return phi;
  double r = std::remainder(phi, 2.0 * pi);  // [-pi, pi]
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

struct PerturbationSpec {
  double q = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(q >= 0.0 && q <= std::numbers::pi, "perturbation q must lie in [0, pi]");
  }
};

/// Random phases on the regions of a SourceGeometry, in the geometry's site order.
class SpeckleSource {
 public:
  SpeckleSource(SourceGeometry geometry, std::vector<double> phases, std::uint64_t seed)
      : geometry_(std::move(geometry)),
        phases_(std::make_shared<const std::vector<double>>(std::move(phases))),
        seed_(seed) {
    detail::require(phases_->size() == geometry_.region_count(),
                    "phase count must equal region count");
    for (double p : *phases_) {
      detail::require(p > -std::numbers::pi && p <= std::numbers::pi,
                      "phases must lie in (-pi, pi]");
    }
  }

  const SourceGeometry& geometry() const { return geometry_; }
  std::span<const double> phases() const { return *phases_; }
  std::uint64_t seed() const { return seed_; }

  /// exp(i phi_a) for every region.
  std::vector<std::complex<double>> phasors() const {
    std::vector<std::complex<double>> out(phases_->size());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = std::polar(1.0, (*phases_)[a]);
    return out;
  }

 private:
  SourceGeometry geometry_;
  std::shared_ptr<const std::vector<double>> phases_;
  std::uint64_t seed_ = 0;
};

inline double region_phase(std::uint64_t seed, Site s) {
  return rng::symmetric_uniform(rng::key(seed, rng::Stream::Phase, s.i, s.j), std::numbers::pi);
}

inline SpeckleSource new_source(const SourceGeometry& geometry, std::uint64_t seed) {
  const auto sites = geometry.sites();
  std::vector<double> phases(sites.size());
  for (std::size_t a = 0; a < sites.size(); ++a) phases[a] = region_phase(seed, sites[a]);
  return SpeckleSource(geometry, std::move(phases), seed);
}

/// Phase shift eps_a, uniform on (-q, q].
inline double region_shift(const PerturbationSpec& spec, Site s) {
  return rng::symmetric_uniform(rng::key(spec.seed, rng::Stream::Perturbation, s.i, s.j), spec.q);
}

inline SpeckleSource perturb(const SpeckleSource& source, const PerturbationSpec& spec) {
  spec.validate();
  const auto sites = source.geometry().sites();
  const auto base = source.phases();
  std::vector<double> phases(base.begin(), base.end());
  if (spec.q > 0.0) {
    for (std::size_t a = 0; a < sites.size(); ++a) {
      phases[a] = wrap_phase(base[a] + region_shift(spec, sites[a]));
    }
  }
  return SpeckleSource(source.geometry(), std::move(phases), source.seed());
}

}  // namespace speckle

#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speckle/core/types.hpp"

namespace speckle {

namespace physics {
inline constexpr double planck = 6.62607015e-34;       // J s
inline constexpr double speed_of_light = 299792458.0;  // m/s
}  // namespace physics

/// Integer lattice coordinate of a source region.
struct Site {
  int i = 0;
  int j = 0;
};

/// Cell centers on integer multiples of the pitch (a center at the origin) or
/// on half-integer multiples (a cell corner at the origin).
enum class LatticeAlignment { Centered, Staggered };

/// Source disc, wavelength and propagation distance. All lengths in meters.
///
/// The disc is tiled by a square lattice of pitch `region_pitch`; a cell is a
/// region iff its center lies within the radius. Instances are immutable and
/// share their site list, so copies are cheap.
class SourceGeometry {
 public:
  static SourceGeometry create(double wavelength, double radius, double distance,
                               std::optional<double> region_pitch = std::nullopt,
                               LatticeAlignment alignment = LatticeAlignment::Centered) {
    detail::require(wavelength > 0.0 && std::isfinite(wavelength), "wavelength must be > 0");
    detail::require(radius > 0.0 && std::isfinite(radius), "source radius must be > 0");
    detail::require(std::isfinite(distance) && distance >= 1000.0 * wavelength,
                    "Fresnel regime violated: distance must be >= 1000 wavelengths");
    const double pitch = region_pitch.value_or(wavelength);
    detail::require(pitch > 0.0 && std::isfinite(pitch), "region pitch must be > 0");

    SourceGeometry g;
    g.wavelength_ = wavelength;
    g.radius_ = radius;
    g.distance_ = distance;
    g.pitch_ = pitch;
    const double off = alignment == LatticeAlignment::Staggered ? 0.5 : 0.0;
    g.offset_ = off * pitch;

    const int h = static_cast<int>(std::floor(radius / pitch + off));
    auto sites = std::make_shared<std::vector<Site>>();
    sites->reserve(static_cast<std::size_t>(std::numbers::pi * (h + 1) * (h + 1)));
    const double r2 = radius * radius;
    for (int j = -h; j <= h; ++j) {
      for (int i = -h; i <= h; ++i) {
        const double x = (i + off) * pitch;
        const double y = (j + off) * pitch;
        if (x * x + y * y <= r2) sites->push_back({i, j});
      }
    }
    detail::require(!sites->empty(), "source disc contains no lattice cell");
    g.half_extent_ = h;
    g.sites_ = std::move(sites);
    return g;
  }

  double wavelength() const { return wavelength_; }
  double radius() const { return radius_; }
  double distance() const { return distance_; }
  double region_pitch() const { return pitch_; }

  std::size_t region_count() const { return sites_->size(); }
  std::span<const Site> sites() const { return *sites_; }
  /// Largest |i| or |j| of any site.
  int half_extent() const { return half_extent_; }
  Vec2 position(Site s) const { return {s.i * pitch_ + offset_, s.j * pitch_ + offset_}; }
  /// Shift of every cell center relative to the integer lattice (0 or pitch/2 per axis).
  Vec2 lattice_offset() const { return {offset_, offset_}; }
  LatticeAlignment alignment() const {
    return offset_ == 0.0 ? LatticeAlignment::Centered : LatticeAlignment::Staggered;
  }

  /// Speckle length scale M = lambda z / (2 pi R).
  double speckle_scale() const {
    return wavelength_ * distance_ / (2.0 * std::numbers::pi * radius_);
  }

  /// Exact ensemble mean of |A|^2 for this lattice: N_reg lambda^2 / z^2.
  double mean_intensity() const {
    const double s = wavelength_ / distance_;
    return static_cast<double>(region_count()) * s * s;
  }

  /// Continuum value pi R^2 / z^2.
  double nominal_mean_intensity() const {
    return std::numbers::pi * radius_ * radius_ / (distance_ * distance_);
  }

 private:
  SourceGeometry() = default;

  double wavelength_ = 0.0;
  double radius_ = 0.0;
  double distance_ = 0.0;
  double pitch_ = 0.0;
  double offset_ = 0.0;
  int half_extent_ = 0;
  std::shared_ptr<const std::vector<Site>> sites_;
};

/// Pixel grid in the detection plane. Pixel (col, row) sits at
/// origin + ((col - (width-1)/2) * pitch, (row - (height-1)/2) * pitch).
struct DetectorGrid {
  int width = 0;
  int height = 0;
  double pixel_pitch = 0.0;
  Vec2 origin{};

  static DetectorGrid create(int width, int height, double pixel_pitch, Vec2 origin = {}) {
    detail::require(width >= 1 && height >= 1, "detector grid must be at least 1x1");
    detail::require(pixel_pitch > 0.0 && std::isfinite(pixel_pitch), "pixel pitch must be > 0");
    return DetectorGrid{width, height, pixel_pitch, origin};
  }

  void validate() const { (void)create(width, height, pixel_pitch, origin); }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  Vec2 position(int col, int row) const {
    return {origin.x + (col - 0.5 * (width - 1)) * pixel_pitch,
            origin.y + (row - 0.5 * (height - 1)) * pixel_pitch};
  }

  bool operator==(const DetectorGrid&) const = default;
};

/// Laser power and exposure, and the resulting photon count per region.
class PhotonBudget {
 public:
  static PhotonBudget create(const SourceGeometry& geometry, double power, double exposure) {
    detail::require(power > 0.0 && exposure > 0.0, "power and exposure must be > 0");
    const double photons = geometry.wavelength() * power * exposure /
                           (physics::planck * physics::speed_of_light *
                            static_cast<double>(geometry.region_count()));
    PhotonBudget b = from_photon_count(photons);
    b.power_ = power;
    b.exposure_ = exposure;
    return b;
  }

  static PhotonBudget from_photon_count(double photons_per_region) {
    detail::require(photons_per_region > 0.0 && std::isfinite(photons_per_region),
                    "photon count per region must be > 0");
    PhotonBudget b;
    b.photons_ = photons_per_region;
    // The phase resolution may equal pi (one bit per region) but not exceed it.
    detail::require(b.phase_resolution() <= std::numbers::pi,
                    "phase resolution must not exceed pi");
    return b;
  }

  double power() const { return power_; }
  double exposure() const { return exposure_; }
  double photons_per_region() const { return photons_; }
  /// Number-phase uncertainty: 1 / (2 sqrt(N0)).
  double phase_resolution() const { return 0.5 / std::sqrt(photons_); }

 private:
  double power_ = 0.0;
  double exposure_ = 0.0;
  double photons_ = 0.0;
};

}  // namespace speckle

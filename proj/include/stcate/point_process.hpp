#pragma once

// Poisson point processes on a piecewise-constant intensity raster.
//
// Densities of patterns are taken relative to the unit-rate Poisson process on
// the window, so a pattern w under intensity h has log-density
//   sum_{s in w} log h(s) - (integral of h) + |window|.
// Only ratios are exposed; the |window| term cancels.

#include <span>
#include <vector>

#include "stcate/rng.hpp"
#include "stcate/spatial.hpp"

namespace stcate {

/// Nonnegative, finite event intensity (events per unit area per period).
class IntensitySurface {
 public:
  explicit IntensitySurface(Raster raster);

  const Raster& raster() const { return raster_; }
  const GridShape& shape() const { return raster_.shape(); }
  double total() const { return total_; }
  double value_at(Location loc) const { return raster_.value_at(loc); }
  /// c times this surface; c must be >= 0.
  IntensitySurface scaled(double c) const;

 private:
  Raster raster_;
  double total_;
};

/// Values below this are treated as zero for overlap checks.
inline constexpr double kIntensityFloor = 1e-300;

/// Precomputed cell CDF for repeated sampling from one surface.
class PoissonSampler {
 public:
  explicit PoissonSampler(const IntensitySurface& intensity);

  PointPattern sample(int t, Engine& rng) const;
  /// Appends `n` points placed independently with probability proportional to
  /// intensity.
  void place(std::size_t n, Engine& rng, std::vector<Location>& out) const;
  double total() const { return total_; }

 private:
  GridShape shape_;
  std::vector<double> cdf_;
  double total_;
};

PointPattern sample_poisson_pattern(const IntensitySurface& intensity, int t, Engine& rng);
PointPattern sample_poisson_pattern(const IntensitySurface& intensity, int t, const SeedStream& stream);

struct KdeBandwidth {
  double hx = 0.0;
  double hy = 0.0;
};

/// Silverman's rule of thumb per axis. Degenerate spreads (one event, or all
/// events sharing a coordinate) fall back to a quarter of the window extent.
KdeBandwidth silverman_bandwidth(std::span<const Location> events, const Window& window);

/// Product-Gaussian KDE evaluated at cell centers and renormalized so the
/// raster integrates to one. Throws InvalidArgument on an empty event list.
IntensitySurface estimate_density_kde(std::span<const Location> events, const GridShape& shape,
                                      KdeBandwidth* used = nullptr);
IntensitySurface estimate_density_kde(std::span<const Location> events, const GridShape& shape,
                                      KdeBandwidth bandwidth);

/// log f_num(w) - log f_den(w) for Poisson patterns. Throws OverlapViolation
/// when the denominator vanishes at an event.
double log_density_ratio(const PointPattern& pattern, const IntensitySurface& numerator,
                         const IntensitySurface& denominator);

}  // namespace stcate

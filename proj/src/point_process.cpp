#include "stcate/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stcate/error.hpp"

namespace stcate {

IntensitySurface::IntensitySurface(Raster raster) : raster_(std::move(raster)) {
  for (double v : raster_.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw InvalidArgument("intensity values must be finite and nonnegative");
    }
  }
  total_ = raster_.integral();
}

IntensitySurface IntensitySurface::scaled(double c) const {
  if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("intensity scale must be >= 0");
  Raster out = raster_;
  for (double& v : out.values()) v *= c;
  return IntensitySurface(std::move(out));
}

PoissonSampler::PoissonSampler(const IntensitySurface& intensity)
    : shape_(intensity.shape()), cdf_(intensity.raster().size()), total_(intensity.total()) {
  const auto values = intensity.raster().values();
  std::partial_sum(values.begin(), values.end(), cdf_.begin());
}

void PoissonSampler::place(std::size_t n, Engine& rng, std::vector<Location>& out) const {
  if (n == 0) return;
  const double mass = cdf_.back();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = shape_.cell_width();
  const double h = shape_.cell_height();
  const Window& win = shape_.window();
  for (std::size_t k = 0; k < n; ++k) {
    const double u = unit(rng) * mass;
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    // Skip zero-mass cells that share the cumulative value.
    if (it == cdf_.end()) it = std::prev(it);
    const auto cell = static_cast<std::size_t>(it - cdf_.begin());
    const double x_lo = win.x_min() + shape_.column_of(cell) * w;
    const double y_lo = win.y_min() + shape_.row_of(cell) * h;
    Location loc{x_lo + unit(rng) * w, y_lo + unit(rng) * h};
    if (shape_.cell_index(loc) != cell) loc = {x_lo, y_lo};
    out.push_back(loc);
  }
}

PointPattern PoissonSampler::sample(int t, Engine& rng) const {
  PointPattern pattern{t, {}};
  if (total_ <= 0.0) return pattern;
  std::poisson_distribution<long> count(total_);
  const long n = count(rng);
  pattern.points.reserve(static_cast<std::size_t>(n));
  place(static_cast<std::size_t>(n), rng, pattern.points);
  return pattern;
}

PointPattern sample_poisson_pattern(const IntensitySurface& intensity, int t, Engine& rng) {
  return PoissonSampler(intensity).sample(t, rng);
}

PointPattern sample_poisson_pattern(const IntensitySurface& intensity, int t,
                                    const SeedStream& stream) {
  Engine rng = stream.engine();
  return sample_poisson_pattern(intensity, t, rng);
}

KdeBandwidth silverman_bandwidth(std::span<const Location> events, const Window& window) {
  if (events.empty()) throw InvalidArgument("bandwidth needs at least one event");
  const double n = static_cast<double>(events.size());
  auto spread = [&](auto coord, double extent) {
    if (events.size() < 2) return extent / 4.0;
    double mean = 0.0;
    for (const Location& e : events) mean += coord(e);
    mean /= n;
    double ss = 0.0;
    for (const Location& e : events) ss += (coord(e) - mean) * (coord(e) - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    return sd > 0.0 ? sd : extent / 4.0;
  };
  const double factor = 1.06 * std::pow(n, -0.2);
  return {factor * spread([](const Location& e) { return e.x; }, window.width()),
          factor * spread([](const Location& e) { return e.y; }, window.height())};
}

IntensitySurface estimate_density_kde(std::span<const Location> events, const GridShape& shape,
                                      KdeBandwidth bandwidth) {
  if (events.empty()) throw InvalidArgument("density estimate needs at least one event");
  if (!(bandwidth.hx > 0.0) || !(bandwidth.hy > 0.0)) {
    throw InvalidArgument("bandwidths must be positive");
  }
  const int nx = shape.nx();
  const int ny = shape.ny();
  const double x0 = shape.window().x_min() + 0.5 * shape.cell_width();
  const double y0 = shape.window().y_min() + 0.5 * shape.cell_height();
  // The kernel factorizes over axes: accumulate per-event outer products.
  std::vector<double> kx(nx), ky(ny);
  Raster density(shape, 0.0);
  auto values = density.values();
  for (const Location& e : events) {
    for (int ix = 0; ix < nx; ++ix) {
      const double u = (x0 + ix * shape.cell_width() - e.x) / bandwidth.hx;
      kx[ix] = std::exp(-0.5 * u * u);
    }
    for (int iy = 0; iy < ny; ++iy) {
      const double u = (y0 + iy * shape.cell_height() - e.y) / bandwidth.hy;
      ky[iy] = std::exp(-0.5 * u * u);
    }
    for (int iy = 0; iy < ny; ++iy) {
      double* row = values.data() + static_cast<std::size_t>(iy) * nx;
      for (int ix = 0; ix < nx; ++ix) row[ix] += ky[iy] * kx[ix];
    }
  }
  const double mass = density.integral();
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw NumericalFailure("kernel density underflowed on the grid; bandwidth too small");
  }
  for (double& v : values) v /= mass;
  return IntensitySurface(std::move(density));
}

IntensitySurface estimate_density_kde(std::span<const Location> events, const GridShape& shape,
                                      KdeBandwidth* used) {
  const KdeBandwidth bw = silverman_bandwidth(events, shape.window());
  if (used != nullptr) *used = bw;
  return estimate_density_kde(events, shape, bw);
}

double log_density_ratio(const PointPattern& pattern, const IntensitySurface& numerator,
                         const IntensitySurface& denominator) {
  double sum = 0.0;
  for (const Location& s : pattern.points) {
    const double den = denominator.value_at(s);
    if (den < kIntensityFloor) {
      std::ostringstream msg;
      msg << "overlap violation: propensity intensity is zero at (" << s.x << ", " << s.y
          << ") in period " << pattern.t;
      throw OverlapViolation(msg.str(), pattern.t, s.x, s.y);
    }
    sum += std::log(numerator.value_at(s)) - std::log(den);
  }
  return sum - (numerator.total() - denominator.total());
}

}  // namespace stcate

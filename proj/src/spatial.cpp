#include "stcate/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stcate/error.hpp"

namespace stcate {

namespace {

int axis_index(double v, double lo, double step, int n) {
  auto i = static_cast<int>(std::floor((v - lo) / step));
  return std::clamp(i, 0, n - 1);
}

}  // namespace

Window::Window(double x_min, double x_max, double y_min, double y_max)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(x_min < x_max) || !(y_min < y_max) || !std::isfinite(x_min) ||
      !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw InvalidArgument("window bounds must be finite with min < max");
  }
}

bool Window::contains(Location loc) const {
  return loc.x >= x_min_ && loc.x <= x_max_ && loc.y >= y_min_ && loc.y <= y_max_;
}

GridShape::GridShape(Window window, int nx, int ny) : window_(window), nx_(nx), ny_(ny) {
  if (nx < 1 || ny < 1) throw InvalidArgument("grid dimensions must be >= 1");
}

std::size_t GridShape::cell_index(Location loc) const {
  if (!window_.contains(loc)) {
    std::ostringstream msg;
    msg << "location (" << loc.x << ", " << loc.y << ") outside window";
    throw InvalidArgument(msg.str());
  }
  const int ix = axis_index(loc.x, window_.x_min(), cell_width(), nx_);
  const int iy = axis_index(loc.y, window_.y_min(), cell_height(), ny_);
  return static_cast<std::size_t>(iy) * nx_ + ix;
}

Location GridShape::cell_center(std::size_t index) const {
  const int ix = column_of(index);
  const int iy = row_of(index);
  return {window_.x_min() + (ix + 0.5) * cell_width(),
          window_.y_min() + (iy + 0.5) * cell_height()};
}

Raster::Raster(GridShape shape, double fill) : shape_(shape), values_(shape.size(), fill) {}

Raster::Raster(GridShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.size()) {
    throw InvalidArgument("raster value count does not match grid shape");
  }
}

double Raster::value_at(Location loc) const { return values_[shape_.cell_index(loc)]; }

double Raster::integral() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum * shape_.cell_area();
}

double raster_value_at(const Raster& raster, Location loc) { return raster.value_at(loc); }

double raster_integral(const Raster& raster) { return raster.integral(); }

Raster distance_raster(std::span<const Location> events, const GridShape& shape) {
  Raster out(shape, std::numeric_limits<double>::infinity());
  if (events.empty()) return out;
  const double dx = shape.cell_width();
  const double dy = shape.cell_height();
  const double x0 = shape.window().x_min() + 0.5 * dx;
  const double y0 = shape.window().y_min() + 0.5 * dy;
  auto values = out.values();
  for (const Location& e : events) {
    for (int iy = 0; iy < shape.ny(); ++iy) {
      const double ddy = y0 + iy * dy - e.y;
      const double ddy2 = ddy * ddy;
      double* row = values.data() + static_cast<std::size_t>(iy) * shape.nx();
      for (int ix = 0; ix < shape.nx(); ++ix) {
        const double ddx = x0 + ix * dx - e.x;
        row[ix] = std::min(row[ix], ddx * ddx + ddy2);
      }
    }
  }
  for (double& v : values) v = std::sqrt(v);
  return out;
}

double distance_to_nearest(Location loc, std::span<const Location> events) {
  double best = std::numeric_limits<double>::infinity();
  for (const Location& e : events) {
    best = std::min(best, std::hypot(loc.x - e.x, loc.y - e.y));
  }
  return best;
}

Window PixelGrid::bounds(std::size_t pixel) const {
  const int ix = shape_.column_of(pixel);
  const int iy = shape_.row_of(pixel);
  const double w = shape_.cell_width();
  const double h = shape_.cell_height();
  const Window& win = shape_.window();
  // The last pixel snaps to the window edge so the union is exact.
  const double x_hi = ix + 1 == px() ? win.x_max() : win.x_min() + (ix + 1) * w;
  const double y_hi = iy + 1 == py() ? win.y_max() : win.y_min() + (iy + 1) * h;
  return Window(win.x_min() + ix * w, x_hi, win.y_min() + iy * h, y_hi);
}

PixelGrid make_pixel_grid(const Window& window, int px, int py) {
  if (px < 1 || py < 1) throw InvalidArgument("pixel counts must be >= 1");
  return PixelGrid(window, px, py);
}

std::vector<int> count_in_pixels(const PointPattern& pattern, const PixelGrid& grid) {
  std::vector<int> counts(grid.pixel_count(), 0);
  for (const Location& loc : pattern.points) ++counts[grid.pixel_of(loc)];
  return counts;
}

Eigen::VectorXd count_vector(const PointPattern& pattern, const PixelGrid& grid) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.pixel_count()));
  for (const Location& loc : pattern.points) counts[static_cast<Eigen::Index>(grid.pixel_of(loc))] += 1.0;
  return counts;
}

ModeratorPanel::ModeratorPanel(PixelGrid grid, Eigen::MatrixXd values, ModeratorKind kind)
    : grid_(grid), values_(std::move(values)), kind_(kind) {
  if (values_.rows() != static_cast<Eigen::Index>(grid_.pixel_count()) || values_.cols() < 1) {
    throw InvalidArgument("moderator panel must have one row per pixel");
  }
  if (!values_.allFinite()) throw InvalidArgument("moderator values must be finite");
  if (kind_ == ModeratorKind::kBinary) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      const double v = values_.data()[i];
      if (v != 0.0 && v != 1.0) throw InvalidArgument("binary moderator entries must be 0 or 1");
    }
  }
}

Eigen::VectorXd ModeratorPanel::column(int t) const {
  if (time_invariant()) return values_.col(0);
  if (t < 1 || t > values_.cols()) {
    throw InvalidArgument("moderator period " + std::to_string(t) + " out of range");
  }
  return values_.col(t - 1);
}

}  // namespace stcate

#pragma once

// Geometric substrate: windows, regular grids, point patterns, piecewise-constant
// rasters and the pixel partition used for outcome counts.
//
// Cells and pixels are half-open [lo, hi) on both axes; the top and right edges
// of the window are closed, so every location in the window belongs to exactly
// one cell.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace stcate {

struct Location {
  double x = 0.0;
  double y = 0.0;
};

class Window {
 public:
  Window(double x_min, double x_max, double y_min, double y_max);

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  bool contains(Location loc) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  double x_min_, x_max_, y_min_, y_max_;
};

/// Treatment or outcome events at one period. `t` is 1-based.
struct PointPattern {
  int t = 1;
  std::vector<Location> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// A regular nx-by-ny lattice over a window. Cell index is row-major with row 0
/// at the lowest y: index = iy * nx + ix.
class GridShape {
 public:
  GridShape(Window window, int nx, int ny);

  const Window& window() const { return window_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  double cell_width() const { return window_.width() / nx_; }
  double cell_height() const { return window_.height() / ny_; }
  double cell_area() const { return window_.area() / static_cast<double>(size()); }

  /// Throws InvalidArgument when `loc` lies outside the window.
  std::size_t cell_index(Location loc) const;
  Location cell_center(std::size_t index) const;
  int column_of(std::size_t index) const { return static_cast<int>(index % nx_); }
  int row_of(std::size_t index) const { return static_cast<int>(index / nx_); }

  friend bool operator==(const GridShape&, const GridShape&) = default;

 private:
  Window window_;
  int nx_;
  int ny_;
};

/// Piecewise-constant field over a window.
class Raster {
 public:
  Raster(GridShape shape, double fill = 0.0);
  Raster(GridShape shape, std::vector<double> values);

  const GridShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Value of the cell containing `loc`.
  double value_at(Location loc) const;
  /// Midpoint-rule integral over the window.
  double integral() const;

 private:
  GridShape shape_;
  std::vector<double> values_;
};

double raster_value_at(const Raster& raster, Location loc);
double raster_integral(const Raster& raster);

/// Euclidean distance from each cell center to the nearest event. With no
/// events every cell holds +infinity, so exp(-D) is identically zero.
Raster distance_raster(std::span<const Location> events, const GridShape& shape);
/// Same contract, at an arbitrary location.
double distance_to_nearest(Location loc, std::span<const Location> events);

/// The pixel partition S_1..S_p of the window; p = px * py, row-major.
class PixelGrid {
 public:
  PixelGrid(Window window, int px, int py) : shape_(window, px, py) {}

  const Window& window() const { return shape_.window(); }
  const GridShape& shape() const { return shape_; }
  int px() const { return shape_.nx(); }
  int py() const { return shape_.ny(); }
  std::size_t pixel_count() const { return shape_.size(); }
  double pixel_area() const { return shape_.cell_area(); }
  std::size_t pixel_of(Location loc) const { return shape_.cell_index(loc); }
  Location centroid(std::size_t pixel) const { return shape_.cell_center(pixel); }
  /// Pixel rectangle as a window.
  Window bounds(std::size_t pixel) const;

  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;

 private:
  GridShape shape_;
};

PixelGrid make_pixel_grid(const Window& window, int px, int py);

/// Number of events in each pixel; entries sum to pattern.size().
std::vector<int> count_in_pixels(const PointPattern& pattern, const PixelGrid& grid);
Eigen::VectorXd count_vector(const PointPattern& pattern, const PixelGrid& grid);

enum class ModeratorKind { kBinary, kContinuous };

/// Pixel-level moderator values R_it. A single column means time-invariant.
class ModeratorPanel {
 public:
  ModeratorPanel(PixelGrid grid, Eigen::MatrixXd values, ModeratorKind kind);

  const PixelGrid& grid() const { return grid_; }
  ModeratorKind kind() const { return kind_; }
  bool time_invariant() const { return values_.cols() == 1; }
  /// Number of periods covered; 0 for time-invariant panels.
  int periods() const { return time_invariant() ? 0 : static_cast<int>(values_.cols()); }
  /// R_i at period t (1-based). Throws InvalidArgument when t is out of range.
  Eigen::VectorXd column(int t) const;
  const Eigen::MatrixXd& values() const { return values_; }

 private:
  PixelGrid grid_;
  Eigen::MatrixXd values_;
  ModeratorKind kind_;
};

}  // namespace stcate

#include <cmath>
#include <limits>

#include "doctest.h"
#include "stcate/error.hpp"
#include "stcate/spatial.hpp"

using namespace stcate;

namespace {
GridShape ten_by_ten() { return GridShape(Window(0, 10, 0, 10), 10, 10); }
}  // namespace

TEST_CASE("window rejects empty or non-finite bounds") {
  CHECK_THROWS_AS(Window(1, 1, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(Window(0, 1, 2, 1), InvalidArgument);
  CHECK_THROWS_AS(Window(0, std::numeric_limits<double>::infinity(), 0, 1), InvalidArgument);
  const Window w(-1, 3, 0, 2);
  CHECK(w.area() == doctest::Approx(8.0));
  CHECK(w.contains({3, 2}));
  CHECK_FALSE(w.contains({3.01, 1}));
}

TEST_CASE("cells are half-open with closed outer edges") {
  const GridShape g = ten_by_ten();
  CHECK(g.cell_index({0.5, 0.5}) == 0);
  CHECK(g.cell_index({3.2, 7.9}) == 73);
  CHECK(g.cell_index({1.0, 0.0}) == 1);
  CHECK(g.cell_index({10.0, 10.0}) == 99);
  CHECK(g.cell_index({10.0, 0.2}) == 9);
  CHECK_THROWS_AS(g.cell_index({-0.1, 5}), InvalidArgument);
  CHECK_THROWS_AS(g.cell_index({5, 10.5}), InvalidArgument);
  const Location c = g.cell_center(73);
  CHECK(c.x == doctest::Approx(3.5));
  CHECK(c.y == doctest::Approx(7.5));
  CHECK(g.column_of(73) == 3);
  CHECK(g.row_of(73) == 7);
}

TEST_CASE("raster lookup and midpoint integral") {
  const GridShape g(Window(0, 4, 0, 2), 4, 2);
  Raster r(g, 2.0);
  CHECK(r.integral() == doctest::Approx(16.0));
  r[5] = 10.0;  // ix = 1, iy = 1
  CHECK(r.value_at({1.5, 1.5}) == 10.0);
  CHECK(raster_value_at(r, {0.5, 0.5}) == 2.0);
  CHECK(raster_integral(r) == doctest::Approx(24.0));
  CHECK_THROWS_AS(Raster(g, std::vector<double>(3, 0.0)), InvalidArgument);
}

TEST_CASE("distance raster to nearest event") {
  const GridShape g = ten_by_ten();
  const std::vector<Location> events{{0, 0}, {10, 10}};
  const Raster d = distance_raster(events, g);
  CHECK(d[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(d[99] == doctest::Approx(std::sqrt(0.5)));
  CHECK(d[g.cell_index({5.5, 4.5})] == doctest::Approx(std::hypot(4.5, 5.5)));
  CHECK(distance_to_nearest({3, 4}, events) == doctest::Approx(5.0));
  const Raster none = distance_raster({}, g);
  CHECK(std::isinf(none[0]));
  CHECK(std::exp(-none[0]) == 0.0);
}

TEST_CASE("pixel grid counts partition the pattern") {
  const PixelGrid grid = make_pixel_grid(Window(0, 10, 0, 10), 2, 2);
  CHECK(grid.pixel_count() == 4);
  CHECK(grid.pixel_area() == doctest::Approx(25.0));
  PointPattern p{1, {{1, 1}, {6, 1}, {6, 6}, {9, 9}, {5, 5}, {10, 10}}};
  const std::vector<int> counts = count_in_pixels(p, grid);
  CHECK(counts == std::vector<int>{1, 1, 0, 4});
  const Eigen::VectorXd v = count_vector(p, grid);
  CHECK(v.sum() == doctest::Approx(6.0));
  const Window b = grid.bounds(1);
  CHECK(b.x_min() == 5.0);
  CHECK(b.y_max() == 5.0);
  CHECK(grid.centroid(3).x == doctest::Approx(7.5));
}

TEST_CASE("moderator panel periods") {
  const PixelGrid grid = make_pixel_grid(Window(0, 1, 0, 1), 2, 1);
  Eigen::MatrixXd v(2, 3);
  v << 0, 1, 0, 1, 1, 0;
  const ModeratorPanel m(grid, v, ModeratorKind::kBinary);
  CHECK_FALSE(m.time_invariant());
  CHECK(m.periods() == 3);
  CHECK(m.column(2)(0) == 1.0);
  CHECK_THROWS_AS(m.column(4), InvalidArgument);
  CHECK_THROWS_AS(m.column(0), InvalidArgument);
  const ModeratorPanel fixed(grid, Eigen::MatrixXd::Ones(2, 1), ModeratorKind::kContinuous);
  CHECK(fixed.time_invariant());
  CHECK(fixed.column(17)(1) == 1.0);
  CHECK_THROWS_AS(ModeratorPanel(grid, Eigen::MatrixXd::Ones(3, 1), ModeratorKind::kBinary), InvalidArgument);
  Eigen::MatrixXd bad(2, 1);
  bad << 0, 0.5;
  CHECK_THROWS_AS(ModeratorPanel(grid, bad, ModeratorKind::kBinary), InvalidArgument);
}

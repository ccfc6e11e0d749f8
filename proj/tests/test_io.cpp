#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "stcate/error.hpp"
#include "stcate/io.hpp"

using namespace stcate;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stcate_io_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

}  // namespace

TEST_CASE("raster CSV round trip is exact") {
  const GridShape g(Window(-1, 3, 0.5, 2.5), 3, 2);
  const Raster r(g, std::vector<double>{0.1, 1.0 / 3.0, -2, 1e-300, 5, 6});
  const fs::path p = scratch("r.csv");
  io::write_raster_csv(p, r);
  const Raster back = io::read_raster_csv(p);
  CHECK(back.shape() == g);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(back[i] == r[i]);
  // First data row is the lowest y.
  CHECK(io::raster_to_csv(r).find("0.1,0.3333333333333333,-2\n") != std::string::npos);
}

TEST_CASE("malformed rasters are rejected with a location") {
  const fs::path p = scratch("bad.csv");
  write_file(p, "nx,ny,x_min,x_max,y_min,y_max\n2,1,0,1,0,1\n1,abc\n");
  CHECK_THROWS_AS(io::read_raster_csv(p), InvalidArgument);
  write_file(p, "nx,ny,x_min,x_max,y_min,y_max\n2,2,0,1,0,1\n1,2\n");
  CHECK_THROWS_AS(io::read_raster_csv(p), InvalidArgument);
  write_file(p, "a,b\n");
  CHECK_THROWS_AS(io::read_raster_csv(p), InvalidArgument);
  CHECK_THROWS_AS(io::read_raster_csv(scratch("missing.csv")), InvalidArgument);
}

TEST_CASE("point CSV round trip with empty periods") {
  std::vector<PointPattern> pts{{1, {{0.5, 0.25}}}, {2, {}}, {3, {{1, 2}, {3, 4}}}};
  const fs::path p = scratch("p.csv");
  io::write_points_csv(p, pts);
  const auto back = io::read_points_csv(p);
  REQUIRE(back.size() == 3);
  CHECK(back[1].empty());
  CHECK(back[2].points[1].y == 4.0);
  CHECK(io::read_points_csv(p, 5).size() == 5);
  CHECK_THROWS_AS(io::read_points_csv(p, 2), InvalidArgument);
  write_file(p, "t,x,y\n0,1,1\n");
  CHECK_THROWS_AS(io::read_points_csv(p), InvalidArgument);
}

TEST_CASE("moderator tables must be complete") {
  const PixelGrid grid = make_pixel_grid(Window(0, 1, 0, 1), 2, 1);
  const fs::path p = scratch("m.csv");
  write_file(p, "pixel,value\n0,1\n1,0\n");
  const ModeratorPanel m = io::read_moderator_csv(p, grid, ModeratorKind::kBinary);
  CHECK(m.time_invariant());
  CHECK(m.values()(0, 0) == 1.0);
  write_file(p, "pixel,t,value\n0,1,0.5\n1,1,0.2\n0,2,0.1\n");
  CHECK_THROWS_AS(io::read_moderator_csv(p, grid, ModeratorKind::kContinuous), InvalidArgument);
  write_file(p, "pixel,t,value\n0,1,0.5\n1,1,0.2\n0,2,0.1\n1,2,0.3\n");
  const ModeratorPanel st = io::read_moderator_csv(p, grid, ModeratorKind::kContinuous);
  CHECK(st.periods() == 2);
  CHECK(io::moderator_to_csv(st).find("1,2,0.3") != std::string::npos);
  write_file(p, "pixel,value\n0,1\n2,0\n");
  CHECK_THROWS_AS(io::read_moderator_csv(p, grid, ModeratorKind::kBinary), InvalidArgument);
}

TEST_CASE("JSON converters") {
  const BasisSpec b = BasisSpec::spline_zero_indicator(3, 0.0, 2.0);
  const BasisSpec back = io::basis_from_json(io::to_json(b));
  CHECK(back.kind() == BasisKind::kSplineZeroIndicator);
  CHECK(back.evaluate(0.7) == b.evaluate(0.7));
  CHECK(io::basis_from_json({{"kind", "binary"}}).columns() == 2);
  CHECK_THROWS_AS(io::basis_from_json({{"kind", "wavelet"}}), InvalidArgument);
  const GridShape g(Window(0, 2, 0, 1), 4, 2);
  CHECK(io::grid_from_json(io::to_json(g)) == g);
  const Eigen::Vector3d v(1.5, -2, 1e-17);
  CHECK(io::vector_from_json(io::to_json(Eigen::VectorXd(v))) == Eigen::VectorXd(v));
  CHECK(io::weighting_mode_from_string("ipw") == WeightingMode::kIpw);
  CHECK(io::q_mode_from_string(io::to_string(QMode::kIdentity)) == QMode::kIdentity);
  CHECK_THROWS_AS(io::weighting_mode_from_string("aipw"), InvalidArgument);
}

TEST_CASE("atomic writes create directories and leave no temp files") {
  const fs::path dir = scratch("nested") / "a" / "b";
  fs::remove_all(scratch("nested"));
  io::atomic_write(dir / "x.txt", "hello");
  CHECK(io::read_text(dir / "x.txt") == "hello");
  io::write_json(dir / "y.json", {{"k", 1}});
  CHECK(io::read_json(dir / "y.json").at("k") == 1);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  CHECK(files == 2);
  write_file(dir / "z.json", "{oops");
  CHECK_THROWS_AS(io::read_json(dir / "z.json"), InvalidArgument);
}

TEST_CASE("weights and panel CSV") {
  WeightSeries s;
  s.M = 2;
  s.log_rho = {0.0, std::log(2.0)};
  const std::string csv = io::weights_to_csv(s);
  CHECK(csv.rfind("t,log_weight,weight\n", 0) == 0);
  CHECK(csv.find("\n3,") != std::string::npos);
}

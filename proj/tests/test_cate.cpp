#include <cmath>

#include "doctest.h"
#include "stcate/cate.hpp"
#include "stcate/error.hpp"

using namespace stcate;

TEST_CASE("natural spline basis values") {
  const NaturalCubicSpline s({0.0, 1.0, 2.0, 4.0});
  CHECK(s.dimension() == 3);
  auto d = [](double x, double xk) {
    auto c = [](double v) { return v > 0 ? v * v * v : 0.0; };
    return (c(x - xk) - c(x - 4.0)) / (4.0 - xk);
  };
  const double x = 2.5;
  const Eigen::VectorXd v = s.evaluate(x);
  CHECK(v(0) == doctest::Approx(x));
  CHECK(v(1) == doctest::Approx(d(x, 0.0) - d(x, 2.0)));
  CHECK(v(2) == doctest::Approx(d(x, 1.0) - d(x, 2.0)));
  CHECK_THROWS_AS(NaturalCubicSpline({1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(NaturalCubicSpline::equally_spaced(0, 0, 1), InvalidArgument);
}

TEST_CASE("natural spline is linear outside the boundary knots") {
  const NaturalCubicSpline s = NaturalCubicSpline::equally_spaced(4, 0.0, 1.0);
  for (double base : {-2.0, 1.0, 3.0}) {
    const Eigen::VectorXd f0 = s.evaluate(base), f1 = s.evaluate(base + 0.5), f2 = s.evaluate(base + 1.0);
    CHECK((f2 - 2 * f1 + f0).cwiseAbs().maxCoeff() < 1e-9);
  }
  const Eigen::VectorXd a = s.evaluate(0.3), b = s.evaluate(0.5), c = s.evaluate(0.7);
  CHECK((c - 2 * b + a).cwiseAbs().maxCoeff() > 1e-4);
}

TEST_CASE("basis specs") {
  const BasisSpec bin = BasisSpec::binary();
  CHECK(bin.columns() == 2);
  CHECK(bin.evaluate(1.0)(1) == 1.0);
  const BasisSpec zi = BasisSpec::spline_zero_indicator(3, 0.0, 2.0);
  CHECK(zi.columns() == 5);
  const Eigen::VectorXd z0 = zi.evaluate(0.0);
  CHECK(z0(0) == 1.0);
  CHECK(z0(1) == 1.0);
  CHECK(z0.tail(3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(zi.evaluate(0.7)(1) == 0.0);
  const BasisSpec ns = BasisSpec::natural_spline(2, 0.0, 1.0, false);
  CHECK(ns.columns() == 2);
  CHECK(ns.first_slope() == 0);
  const BasisSpec cu = BasisSpec::custom({[](double r) { return r * r; }}, {"sq"});
  CHECK(cu.evaluate(3.0)(1) == 9.0);
  CHECK(cu.column_names().back() == "sq");
}

TEST_CASE("binary regression recovers group means") {
  Eigen::MatrixXd Z(4, 2);
  Z << 1, 0, 1, 0, 1, 1, 1, 1;
  Eigen::VectorXd D(4);
  D << 1, 3, 10, 14;
  const TimeFit f = fit_time_beta(Z, D, 5);
  CHECK(f.t == 5);
  CHECK(f.beta(0) == doctest::Approx(2.0));
  CHECK(f.beta(1) == doctest::Approx(10.0));
}

TEST_CASE("rank-deficient designs") {
  Eigen::MatrixXd Z(3, 2);
  Z << 1, 0, 1, 0, 1, 0;
  CHECK_THROWS_AS(LeastSquaresProjector{Z}, RankDeficient);
  const LeastSquaresProjector mn(Z, RankPolicy::kMinimumNorm);
  CHECK(mn.minimum_norm());
  const Eigen::VectorXd b = mn.apply(Eigen::Vector3d(1, 2, 3));
  CHECK(b(0) == doctest::Approx(2.0));
  CHECK(std::abs(b(1)) < 1e-12);
}

TEST_CASE("projector splits into the two intervention projections") {
  Eigen::MatrixXd Z(4, 2);
  Z << 1, 0, 1, 1, 1, 2, 1, 3;
  const LeastSquaresProjector p(Z);
  const Eigen::Vector4d yhp(1, 2, 3, 4), yhpp(2, 2, 5, 9);
  const TimeFit f = fit_time_beta(p, yhp, yhpp, 2);
  CHECK((f.beta - (f.proj_hpp - f.proj_hp)).norm() < 1e-12);
  CHECK((f.proj_hp - Eigen::Vector2d(1, 1)).norm() < 1e-12);
}

TEST_CASE("fit over periods with a lagged time-varying moderator") {
  const PixelGrid grid = make_pixel_grid(Window(0, 2, 0, 1), 2, 1);
  // Moderator flips each period; M = 2 uses the value at t - 1.
  Eigen::MatrixXd r(2, 4);
  r << 0, 1, 0, 1, 1, 0, 1, 0;
  const ModeratorPanel mod(grid, r, ModeratorKind::kBinary);
  PseudoOutcomePanel hp{Eigen::MatrixXd::Zero(2, 3), 2, "hp", WeightingMode::kHajek, grid};
  PseudoOutcomePanel hpp{Eigen::MatrixXd::Zero(2, 3), 2, "hpp", WeightingMode::kHajek, grid};
  // Pixel with lagged moderator 1 gains 5, the other gains 1.
  for (int j = 0; j < 3; ++j) {
    const int lag = j + 1;
    for (int i = 0; i < 2; ++i) hpp.values(i, j) = r(i, lag - 1) == 1.0 ? 5.0 : 1.0;
  }
  const CateFit fit = fit_cate(mod, hp, hpp, 2, BasisSpec::binary());
  CHECK(fit.n_eff() == 3);
  CHECK(fit.beta_bar(0) == doctest::Approx(1.0));
  CHECK(fit.beta_bar(1) == doctest::Approx(4.0));
  CHECK(evaluate_cate(fit, 1.0) == doctest::Approx(5.0));
  CHECK(fit.periods.front().t == 2);
  CHECK_THROWS_AS(fit_cate(mod, hp, hpp, 1, BasisSpec::binary()), InvalidArgument);
}

TEST_CASE("average, district scale and extrapolation flag") {
  std::vector<TimeFit> fits(2);
  fits[0].beta = Eigen::Vector2d(1, 2);
  fits[1].beta = Eigen::Vector2d(3, 6);
  CateFit fit = average_beta(fits, BasisSpec::binary());
  CHECK(fit.beta_bar(1) == doctest::Approx(4.0));
  fit.district_scale = 10.0;
  CHECK(evaluate_cate(fit, 1.0) == doctest::Approx(60.0));
  fit.support_lo = 0.1;
  fit.support_hi = 0.9;
  CHECK(is_extrapolation(fit, 0.95));
  CHECK_FALSE(is_extrapolation(fit, 0.5));
}

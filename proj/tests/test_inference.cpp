#include <cmath>

#include "doctest.h"
#include "stcate/error.hpp"
#include "stcate/inference.hpp"

using namespace stcate;

namespace {

// Three periods with unit weights; projections chosen by hand.
struct Fixture {
  CateFit fit;
  WeightSeries w;
  Fixture() {
    std::vector<TimeFit> fits(3);
    const double hp[3][2] = {{1, 0}, {2, 1}, {0, 2}};
    const double hpp[3][2] = {{2, 1}, {5, 1}, {2, 7}};
    for (int t = 0; t < 3; ++t) {
      fits[t].t = t + 1;
      fits[t].proj_hp = Eigen::Vector2d(hp[t][0], hp[t][1]);
      fits[t].proj_hpp = Eigen::Vector2d(hpp[t][0], hpp[t][1]);
      fits[t].beta = fits[t].proj_hpp - fits[t].proj_hp;
    }
    fit = average_beta(fits, BasisSpec::binary());
    w.M = 1;
    w.log_rho = {0, 0, 0};
    w.single_log_rho = {0, 0, 0};
  }
};

}  // namespace

TEST_CASE("distribution quantiles") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(chi_square_quantile(0.95, 1) == doctest::Approx(3.841458820694124).epsilon(1e-12));
  CHECK(chi_square_quantile(0.95, 3) == doctest::Approx(7.814727903251178).epsilon(1e-12));
  CHECK(chi_square_upper_tail(4.0, 1) == doctest::Approx(0.04550026389635842).epsilon(1e-12));
  CHECK(chi_square_upper_tail(0.0, 2) == 1.0);
}

TEST_CASE("with unit weights the bound is the covariance of per-period betas") {
  Fixture f;
  const VarianceBound b = estimate_variance_bound(f.fit, f.w, f.w, QMode::kAppendixD);
  CHECK(b.n_eff == 3);
  CHECK((b.Q - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-15);
  Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
  for (const TimeFit& t : f.fit.periods) {
    const Eigen::Vector2d d = t.beta - f.fit.beta_bar;
    expected += d * d.transpose();
  }
  expected /= 3.0;
  CHECK((b.Sigma_hat - expected).norm() < 1e-12);
  const Eigen::MatrixXd composed = b.J_hat * b.Q * b.V_hat * b.Q.transpose() * b.J_hat.transpose();
  CHECK((composed - b.Sigma_hat).norm() < 1e-12);
}

TEST_CASE("A vectors carry unstabilized weights") {
  Fixture f;
  WeightSeries hp = f.w;
  hp.log_rho = {std::log(2.0), 0.0, std::log(4.0)};
  hp.mean_rho = 3.0;
  const auto A = build_A_vectors(f.fit, hp, f.w);
  REQUIRE(A.size() == 3);
  CHECK(A[0](0) == doctest::Approx(3.0));
  CHECK(A[2](4) == doctest::Approx(12.0));
  CHECK(A[1](5) == doctest::Approx(1.0));
}

TEST_CASE("stabilization matrix Q") {
  Fixture f;
  WeightSeries hp = f.w;
  hp.M = 2;
  hp.log_rho = {std::log(2.0), std::log(4.0)};
  hp.single_log_rho = {0.0, std::log(3.0), 0.0};
  const Eigen::MatrixXd Q = make_Q(QMode::kAppendixD, 2, hp, f.w);
  CHECK(Q(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(Q(2, 2) == doctest::Approx(1.0));
  CHECK(Q(4, 4) == doctest::Approx(std::pow(5.0 / 3.0, -2)));
  CHECK(Q(5, 5) == doctest::Approx(1.0));
  CHECK((make_Q(QMode::kIdentity, 2, hp, f.w) - Eigen::MatrixXd::Identity(6, 6)).norm() == 0.0);
}

TEST_CASE("IPW bound is the mean outer product") {
  Fixture f;
  const VarianceBound b = ipw_variance_bound(f.fit);
  Eigen::Matrix2d expected = Eigen::Matrix2d::Zero();
  for (const TimeFit& t : f.fit.periods) expected += t.beta * t.beta.transpose();
  CHECK((b.Sigma_hat - expected / 3.0).norm() < 1e-12);
}

TEST_CASE("bound needs two periods") {
  Fixture f;
  f.fit.periods.resize(1);
  CHECK_THROWS_AS(estimate_variance_bound(f.fit, f.w, f.w), InvalidArgument);
}

TEST_CASE("PSD projection") {
  Eigen::Matrix2d m;
  m << 1, 0, 0, -1e-14;
  CHECK(project_psd(m)(1, 1) == 0.0);
  m << 1, 0, 0, -0.5;
  CHECK_THROWS_AS(project_psd(m), NumericalFailure);
}

TEST_CASE("confidence interval from the bound") {
  CateFit fit;
  fit.beta_bar = Eigen::Vector2d(1.0, 2.0);
  fit.basis = BasisSpec::binary();
  VarianceBound b;
  b.Sigma_hat = Eigen::Matrix2d::Identity() * 4.0;
  b.n_eff = 16;
  // z(1) = (1, 1): variance 8 / 16.
  const double se = std::sqrt(0.5);
  CHECK(cate_standard_error(fit, b, 1.0) == doctest::Approx(se));
  const Interval ci = cate_confidence_interval(fit, b, 1.0, 0.95);
  CHECK(ci.lo == doctest::Approx(3.0 - 1.959963984540054 * se));
  CHECK(ci.hi == doctest::Approx(3.0 + 1.959963984540054 * se));
  fit.district_scale = -2.0;
  CHECK(cate_standard_error(fit, b, 1.0) == doctest::Approx(2 * se));
  CHECK_THROWS_AS(cate_confidence_interval(fit, b, 1.0, 1.0), InvalidArgument);
}

TEST_CASE("Wald test of no heterogeneity") {
  const HeterogeneityTest t = test_no_heterogeneity(Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 4.0), 16);
  CHECK(t.T_c == doctest::Approx(4.0));
  CHECK(t.dof == 1);
  CHECK(t.p_value == doctest::Approx(0.04550026389635842).epsilon(1e-10));
  const HeterogeneityTest zero = test_no_heterogeneity(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2), 5);
  CHECK(zero.T_c == 0.0);
  CHECK(zero.p_value == 1.0);
  CHECK_THROWS_AS(test_no_heterogeneity(Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Zero(2, 2), 5),
                  NumericalFailure);

  CateFit fit;
  fit.beta_bar = Eigen::Vector2d(7.0, 1.0);
  fit.basis = BasisSpec::binary();
  VarianceBound b;
  b.Sigma_hat = Eigen::Matrix2d::Identity() * 4.0;
  b.n_eff = 16;
  CHECK(test_no_heterogeneity(fit, b).T_c == doctest::Approx(4.0));
}

TEST_CASE("confidence set inverts the test") {
  const Eigen::Vector2d beta(1.0, 0.0);
  const Eigen::Matrix2d sigma = Eigen::Matrix2d::Identity();
  CHECK(confidence_set_member(beta, beta, sigma, 10, 0.95));
  // 10 * 0.6^2 = 3.6 < 5.99; 10 * 0.8^2 = 6.4 > 5.99.
  CHECK(confidence_set_member(Eigen::Vector2d(1.6, 0.0), beta, sigma, 10, 0.95));
  CHECK_FALSE(confidence_set_member(Eigen::Vector2d(1.8, 0.0), beta, sigma, 10, 0.95));
}

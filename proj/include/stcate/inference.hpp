#pragma once

// Variance-bound estimation for the time-averaged CATE coefficients,
// confidence intervals, the chi-square test of no heterogeneity and its
// inverted confidence set.
//
// Hájek path: with
//   A_t = [ (Z'Z)^{-1} Z' rho'_t N_t ; (Z'Z)^{-1} Z' rho''_t N_t ; rho'_t ; rho''_t ],
//   V = mean_t A_t A_t',
//   J = [ I, -I, -mean_t (Z'Z)^{-1} Z' Y~^H_t(h'), mean_t (Z'Z)^{-1} Z' Y~^H_t(h'') ],
// the bound is Sigma = J Q V Q' J' and Var(beta_bar) is approximately Sigma / n_eff.
// IPW path: Sigma = mean_t beta_t beta_t'.

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stcate/cate.hpp"
#include "stcate/weights.hpp"

namespace stcate {

enum class QMode {
  kIdentity,
  kAppendixD,  // diag(rho_bar'^{-1} I, rho_bar''^{-1} I, xi'^{-M}, xi''^{-M})
};

struct VarianceBound {
  Eigen::MatrixXd V_hat;      // (2L+2) x (2L+2); empty on the IPW path
  Eigen::MatrixXd J_hat;      // L x (2L+2); empty on the IPW path
  Eigen::MatrixXd Q;          // (2L+2) x (2L+2); empty on the IPW path
  Eigen::MatrixXd Sigma_hat;  // L x L
  int n_eff = 0;
  QMode q_mode = QMode::kAppendixD;
};

/// One (2L+2)-vector per usable period, on the unstabilized weight scale.
std::vector<Eigen::VectorXd> build_A_vectors(const CateFit& fit, const WeightSeries& weights_hp,
                                             const WeightSeries& weights_hpp);

/// Mean of the single-period weights exp(single_log_rho) over t = 1..T.
double mean_single_period_weight(const WeightSeries& series);

Eigen::MatrixXd make_Q(QMode mode, int L, const WeightSeries& weights_hp, const WeightSeries& weights_hpp);

/// Sigma = J Q V Q' J'. Needs at least two periods; a bound that is not PSD
/// within 1e-10 raises NumericalFailure, otherwise negative eigenvalues are
/// floored at zero.
VarianceBound estimate_variance_bound(const std::vector<Eigen::VectorXd>& A, const CateFit& fit,
                                      const Eigen::MatrixXd& Q);
VarianceBound estimate_variance_bound(const CateFit& fit, const WeightSeries& weights_hp,
                                      const WeightSeries& weights_hpp, QMode mode = QMode::kAppendixD);

/// mean_t beta_t beta_t' for IPW-mode fits.
Eigen::MatrixXd estimate_variance_bound_ipw(const std::vector<TimeFit>& fits);
VarianceBound ipw_variance_bound(const CateFit& fit);

/// Symmetric PSD projection (eigenvalues floored at 0). Throws NumericalFailure
/// if an eigenvalue is below -tol * max(1, |largest|).
Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, double tol = 1e-10);

double normal_quantile(double p);
double chi_square_quantile(double p, int dof);
double chi_square_upper_tail(double x, int dof);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// tau(r) +- z_{1-alpha/2} sqrt(z(r)' Sigma z(r) / n_eff), scaled like the estimate.
Interval cate_confidence_interval(const CateFit& fit, const VarianceBound& bound, double r, double level);
double cate_standard_error(const CateFit& fit, const VarianceBound& bound, double r);

struct HeterogeneityTest {
  double T_c = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Wald statistic n_eff * beta' Sigma^{-1} beta with a chi-square(L) reference.
/// An all-zero beta gives T_c = 0 and p = 1 without inverting Sigma.
HeterogeneityTest test_no_heterogeneity(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma, int n_eff);
/// Tests the non-intercept block of a fit.
HeterogeneityTest test_no_heterogeneity(const CateFit& fit, const VarianceBound& bound);

/// True iff n_eff (beta_bar - candidate)' Sigma^{-1} (beta_bar - candidate) is
/// below the chi-square(L) quantile at `level`.
bool confidence_set_member(const Eigen::VectorXd& candidate, const Eigen::VectorXd& beta_bar,
                           const Eigen::MatrixXd& sigma, int n_eff, double level);

/// Non-intercept block of a vector / matrix for a basis.
Eigen::VectorXd slope_block(const Eigen::VectorXd& v, const BasisSpec& basis);
Eigen::MatrixXd slope_block(const Eigen::MatrixXd& m, const BasisSpec& basis);

}  // namespace stcate

#pragma once

// Per-period least squares of pseudo-effects on the moderator basis and the
// time-averaged projected CATE estimator.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stcate/basis.hpp"
#include "stcate/weights.hpp"

namespace stcate {

enum class RankPolicy {
  kError,        // rank-deficient designs raise RankDeficient
  kMinimumNorm,  // fall back to the minimum-norm solution, flagged in the fit
};

/// Applies (Z'Z)^{-1} Z' through a column-pivoted QR of Z.
class LeastSquaresProjector {
 public:
  explicit LeastSquaresProjector(const Eigen::MatrixXd& Z, RankPolicy policy = RankPolicy::kError);

  Eigen::VectorXd apply(const Eigen::VectorXd& y) const;
  /// Ratio of the largest to the smallest diagonal entry of R.
  double condition() const { return condition_; }
  bool minimum_norm() const { return cod_.has_value(); }
  Eigen::Index rows() const { return rows_; }

 private:
  Eigen::Index rows_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  std::optional<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> cod_;
  double condition_ = 1.0;
};

struct TimeFit {
  int t = 0;
  Eigen::VectorXd beta;      // projection of the pseudo-effect
  Eigen::VectorXd proj_hp;   // projection of the h' pseudo-outcomes
  Eigen::VectorXd proj_hpp;  // projection of the h'' pseudo-outcomes
  double condition = 1.0;
  bool minimum_norm = false;
};

/// beta_t = (Z'Z)^{-1} Z' D_t. Only `beta` is filled.
TimeFit fit_time_beta(const Eigen::MatrixXd& Z, const Eigen::VectorXd& effect, int t = 0,
                      RankPolicy policy = RankPolicy::kError);
/// Fills beta = proj_hpp - proj_hp along with both cached projections.
TimeFit fit_time_beta(const LeastSquaresProjector& projector, const Eigen::VectorXd& outcome_hp,
                      const Eigen::VectorXd& outcome_hpp, int t);

struct CateFit {
  Eigen::VectorXd beta_bar;
  std::vector<TimeFit> periods;
  BasisSpec basis = BasisSpec::binary();
  int M = 1;
  WeightingMode mode = WeightingMode::kHajek;
  std::string hp_id;
  std::string hpp_id;
  double district_scale = 1.0;
  /// 0.025 and 0.975 quantiles of the lagged moderator values used.
  double support_lo = 0.0;
  double support_hi = 0.0;

  int n_eff() const { return static_cast<int>(periods.size()); }
};

/// Unweighted mean of the per-period coefficients.
CateFit average_beta(std::vector<TimeFit> fits, const BasisSpec& basis);

/// tau(r) = district_scale * z(r)' beta_bar.
double evaluate_cate(const CateFit& fit, double r);
/// True when r lies outside the central 95% range of observed moderator values.
bool is_extrapolation(const CateFit& fit, double r);

struct CateOptions {
  RankPolicy rank_policy = RankPolicy::kError;
  double district_scale = 1.0;
};

/// Fits every usable period of a pair of pseudo-outcome panels and averages.
CateFit fit_cate(const ModeratorPanel& moderator, const PseudoOutcomePanel& panel_hp,
                 const PseudoOutcomePanel& panel_hpp, int M, const BasisSpec& basis,
                 const CateOptions& options = {});

}  // namespace stcate

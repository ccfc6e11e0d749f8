#pragma once

// Log-linear nonhomogeneous Poisson model for the observed treatment process:
//   e_t(w) propto exp(sum_k gamma_k X_t^k(w)),
// fitted by maximizing
//   sum_t [ sum_{s in W_t} gamma' X_t(s) - integral exp(gamma' X_t(u)) du ]
// with the integral taken by the midpoint rule on the covariate grid.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stcate/point_process.hpp"
#include "stcate/spatial.hpp"

namespace stcate {

/// K covariate surfaces per period on one grid. Rows of the stacked design are
/// (period, cell) pairs, period-major.
class CovariateStack {
 public:
  CovariateStack(GridShape shape, std::vector<std::string> names);

  /// Appends period `periods() + 1`; one raster per covariate, all on `shape()`.
  void add_period(std::span<const Raster> surfaces);
  /// Appends a period from a (cells x K) block.
  void add_period(const Eigen::MatrixXd& block);

  const GridShape& shape() const { return shape_; }
  const std::vector<std::string>& names() const { return names_; }
  int covariate_count() const { return static_cast<int>(names_.size()); }
  int periods() const { return periods_; }
  /// (cells x K) design for period t (1-based).
  Eigen::Block<const Eigen::MatrixXd> design(int t) const;
  /// Covariate row of the cell containing `loc` at period t.
  Eigen::VectorXd at(int t, Location loc) const;
  Raster covariate(int t, int k) const;
  /// Index of an all-ones column, or -1.
  int intercept_index() const;

 private:
  GridShape shape_;
  std::vector<std::string> names_;
  Eigen::MatrixXd stacked_;
  int periods_ = 0;
};

struct FitOptions {
  double tolerance = 1e-6;  // on the infinity norm of the score
  int max_iterations = 200;
  int t_begin = 1;  // fit periods t_begin..t_end inclusive
  int t_end = -1;   // -1: last period
};

struct FitReport {
  Eigen::VectorXd gamma_hat;
  double log_likelihood = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd observed_information;
  int t_begin = 1;
  int t_end = 1;
};

inline constexpr double kExponentClamp = 700.0;

/// Log-likelihood, score and observed information of the log-linear model.
class PropensityLikelihood {
 public:
  PropensityLikelihood(std::shared_ptr<const CovariateStack> covariates,
                       std::span<const PointPattern> treatments, int t_begin, int t_end);

  double value(const Eigen::VectorXd& gamma) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& gamma) const;
  Eigen::MatrixXd information(const Eigen::VectorXd& gamma) const;
  long event_count() const { return events_; }
  int period_count() const { return t_end_ - t_begin_ + 1; }

 private:
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& gamma) const;

  std::shared_ptr<const CovariateStack> covariates_;
  int t_begin_;
  int t_end_;
  Eigen::VectorXd event_sum_;
  long events_ = 0;
};

/// BFGS ascent with analytic score, started from gamma = 0 with the intercept
/// (if any) at log(N / (T * area)) and the inverse observed information as the
/// initial curvature. A singular information matrix at the start raises
/// NumericalFailure; running out of iterations returns converged = false.
FitReport fit_propensity(std::shared_ptr<const CovariateStack> covariates,
                         std::span<const PointPattern> treatments, const FitOptions& options = {});

struct ClampDiagnostics {
  long clamped_cells = 0;
};

class PropensityModel {
 public:
  PropensityModel(std::shared_ptr<const CovariateStack> covariates, Eigen::VectorXd gamma);

  const Eigen::VectorXd& gamma() const { return gamma_; }
  const CovariateStack& covariates() const { return *covariates_; }
  std::shared_ptr<const CovariateStack> covariates_ptr() const { return covariates_; }

  /// exp(gamma' X_t) on the grid, exponent clamped to +-700.
  IntensitySurface intensity(int t, ClampDiagnostics* diagnostics = nullptr) const;

 private:
  std::shared_ptr<const CovariateStack> covariates_;
  Eigen::VectorXd gamma_;
};

IntensitySurface evaluate_propensity_intensity(const PropensityModel& model, int t,
                                               ClampDiagnostics* diagnostics = nullptr);

/// Axis-aligned rectangle; may be degenerate (zero area).
struct Rect {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
};

/// Expected treatment counts in `region` for periods t_begin..t_end.
std::vector<double> predict_counts(const PropensityModel& model, int t_begin, int t_end,
                                   const Rect& region);
/// Same, for a union of pixels. Throws InvalidArgument for an empty list.
std::vector<double> predict_counts(const PropensityModel& model, int t_begin, int t_end,
                                   const PixelGrid& grid, std::span<const std::size_t> pixels);
/// Integral of a piecewise-constant raster over a rectangle (clipped to the window).
double integrate_over(const Raster& raster, double x_lo, double x_hi, double y_lo, double y_hi);

}  // namespace stcate

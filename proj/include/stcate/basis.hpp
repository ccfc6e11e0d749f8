#pragma once

// Working-model bases z(r) for the projected CATE tau(r) = z(r)' beta.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stcate/spatial.hpp"

namespace stcate {

enum class BasisKind {
  kBinary,              // (1, r) on r in {0, 1}
  kNaturalSpline,       // (1?, N_1(r), ..., N_L(r))
  kSplineZeroIndicator, // (1?, I(r == 0), N_1(r) - N_1(0), ..., N_L(r) - N_L(0))
  kCustom,
};

/// Natural cubic spline with knots xi_1 < ... < xi_K (K = L + 1, boundary knots
/// at both ends): columns x, and d_k(x) - d_{K-1}(x) for k = 1..K-2 where
///   d_k(x) = ((x - xi_k)_+^3 - (x - xi_K)_+^3) / (xi_K - xi_k).
/// Linear beyond the boundary knots; spans the same space as any other natural
/// cubic spline basis on these knots.
class NaturalCubicSpline {
 public:
  explicit NaturalCubicSpline(std::vector<double> knots);
  /// L columns on equally spaced knots over [lo, hi].
  static NaturalCubicSpline equally_spaced(int L, double lo, double hi);

  int dimension() const { return static_cast<int>(knots_.size()) - 1; }
  const std::vector<double>& knots() const { return knots_; }
  Eigen::VectorXd evaluate(double x) const;

 private:
  double d(int k, double x) const;
  std::vector<double> knots_;
};

class BasisSpec {
 public:
  static BasisSpec binary();
  static BasisSpec natural_spline(int L, double lo, double hi, bool include_intercept = true);
  static BasisSpec spline_zero_indicator(int L, double lo, double hi, bool include_intercept = true);
  static BasisSpec custom(std::vector<std::function<double(double)>> columns,
                          std::vector<std::string> names, bool include_intercept = true);

  BasisKind kind() const { return kind_; }
  bool include_intercept() const { return include_intercept_; }
  /// Number of non-intercept columns.
  int L() const { return L_; }
  int columns() const { return L_ + (include_intercept_ ? 1 : 0); }
  /// Index of the first non-intercept column.
  int first_slope() const { return include_intercept_ ? 1 : 0; }
  const std::vector<double>& knots() const;
  std::vector<std::string> column_names() const;

  Eigen::VectorXd evaluate(double r) const;

 private:
  BasisSpec() = default;

  BasisKind kind_ = BasisKind::kBinary;
  bool include_intercept_ = true;
  int L_ = 1;
  std::vector<NaturalCubicSpline> spline_;  // zero or one element
  std::vector<std::function<double(double)>> custom_;
  std::vector<std::string> custom_names_;
};

/// Z_t: row i is z(R_{i, t-M+1}), the moderator just before the intervention window.
Eigen::MatrixXd build_basis_matrix(const ModeratorPanel& moderator, int t, int M, const BasisSpec& spec);

}  // namespace stcate

#include "stcate/basis.hpp"

#include <cmath>

#include "stcate/error.hpp"

namespace stcate {

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw InvalidArgument("natural spline needs at least two knots");
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw InvalidArgument("spline knots must be strictly increasing");
  }
}

NaturalCubicSpline NaturalCubicSpline::equally_spaced(int L, double lo, double hi) {
  if (L < 1) throw InvalidArgument("spline dimension must be >= 1");
  if (!(hi > lo)) throw InvalidArgument("spline boundary knots must satisfy lo < hi");
  std::vector<double> knots(static_cast<std::size_t>(L) + 1);
  for (int k = 0; k <= L; ++k) knots[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / L;
  knots.back() = hi;
  return NaturalCubicSpline(std::move(knots));
}

double NaturalCubicSpline::d(int k, double x) const {
  auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
  const double last = knots_.back();
  const double xk = knots_[static_cast<std::size_t>(k)];
  return (cube(x - xk) - cube(x - last)) / (last - xk);
}

Eigen::VectorXd NaturalCubicSpline::evaluate(double x) const {
  const int K = static_cast<int>(knots_.size());
  Eigen::VectorXd out(dimension());
  out[0] = x;
  for (int k = 0; k + 2 < K; ++k) out[k + 1] = d(k, x) - d(K - 2, x);
  return out;
}

BasisSpec BasisSpec::binary() {
  BasisSpec spec;
  spec.kind_ = BasisKind::kBinary;
  spec.include_intercept_ = true;
  spec.L_ = 1;
  return spec;
}

BasisSpec BasisSpec::natural_spline(int L, double lo, double hi, bool include_intercept) {
  BasisSpec spec;
  spec.kind_ = BasisKind::kNaturalSpline;
  spec.include_intercept_ = include_intercept;
  spec.spline_.push_back(NaturalCubicSpline::equally_spaced(L, lo, hi));
  spec.L_ = L;
  return spec;
}

BasisSpec BasisSpec::spline_zero_indicator(int L, double lo, double hi, bool include_intercept) {
  BasisSpec spec = natural_spline(L, lo, hi, include_intercept);
  spec.kind_ = BasisKind::kSplineZeroIndicator;
  spec.L_ = L + 1;
  return spec;
}

BasisSpec BasisSpec::custom(std::vector<std::function<double(double)>> columns,
                            std::vector<std::string> names, bool include_intercept) {
  if (columns.empty()) throw InvalidArgument("custom basis needs at least one column");
  if (names.size() != columns.size()) throw InvalidArgument("one name per custom column");
  BasisSpec spec;
  spec.kind_ = BasisKind::kCustom;
  spec.include_intercept_ = include_intercept;
  spec.L_ = static_cast<int>(columns.size());
  spec.custom_ = std::move(columns);
  spec.custom_names_ = std::move(names);
  return spec;
}

const std::vector<double>& BasisSpec::knots() const {
  static const std::vector<double> none;
  return spline_.empty() ? none : spline_.front().knots();
}

std::vector<std::string> BasisSpec::column_names() const {
  std::vector<std::string> names;
  if (include_intercept_) names.emplace_back("intercept");
  switch (kind_) {
    case BasisKind::kBinary:
      names.emplace_back("r");
      break;
    case BasisKind::kSplineZeroIndicator:
      names.emplace_back("zero");
      [[fallthrough]];
    case BasisKind::kNaturalSpline:
      for (int l = 1; l <= spline_.front().dimension(); ++l) names.push_back("ns" + std::to_string(l));
      break;
    case BasisKind::kCustom:
      names.insert(names.end(), custom_names_.begin(), custom_names_.end());
      break;
  }
  return names;
}

Eigen::VectorXd BasisSpec::evaluate(double r) const {
  Eigen::VectorXd z(columns());
  int c = 0;
  if (include_intercept_) z[c++] = 1.0;
  switch (kind_) {
    case BasisKind::kBinary:
      z[c] = r;
      break;
    case BasisKind::kNaturalSpline:
      z.tail(L_) = spline_.front().evaluate(r);
      break;
    case BasisKind::kSplineZeroIndicator:
      z[c++] = r == 0.0 ? 1.0 : 0.0;
      z.tail(L_ - 1) = spline_.front().evaluate(r) - spline_.front().evaluate(0.0);
      break;
    case BasisKind::kCustom:
      for (const auto& f : custom_) z[c++] = f(r);
      break;
  }
  return z;
}

Eigen::MatrixXd build_basis_matrix(const ModeratorPanel& moderator, int t, int M, const BasisSpec& spec) {
  const int lag = t - M + 1;
  if (lag < 1 || (!moderator.time_invariant() && lag > moderator.periods())) {
    throw InvalidArgument("moderator lag period " + std::to_string(lag) + " out of range");
  }
  const Eigen::VectorXd r = moderator.column(lag);
  Eigen::MatrixXd Z(r.size(), spec.columns());
  for (Eigen::Index i = 0; i < r.size(); ++i) Z.row(i) = spec.evaluate(r[i]).transpose();
  return Z;
}

}  // namespace stcate

#include "stcate/inference.hpp"

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "stcate/error.hpp"

namespace stcate {

namespace {

Eigen::VectorXd mean_projection(const CateFit& fit, bool hpp) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(fit.beta_bar.size());
  for (const TimeFit& f : fit.periods) acc += hpp ? f.proj_hpp : f.proj_hp;
  return acc / static_cast<double>(fit.periods.size());
}

double quad_inverse(const Eigen::VectorXd& v, const Eigen::MatrixXd& sigma) {
  const Eigen::MatrixXd psd = project_psd(sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(psd);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    throw NumericalFailure("variance bound is singular; cannot invert");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(psd);
  if (llt.info() != Eigen::Success) throw NumericalFailure("Cholesky factorization of bound failed");
  return v.dot(llt.solve(v));
}

}  // namespace

std::vector<Eigen::VectorXd> build_A_vectors(const CateFit& fit, const WeightSeries& weights_hp,
                                             const WeightSeries& weights_hpp) {
  const Eigen::Index L = fit.beta_bar.size();
  std::vector<Eigen::VectorXd> out;
  out.reserve(fit.periods.size());
  for (const TimeFit& f : fit.periods) {
    if (f.proj_hp.size() != L || f.proj_hpp.size() != L) {
      throw InvalidArgument("time fit lacks cached pseudo-outcome projections");
    }
    Eigen::VectorXd a(2 * L + 2);
    a.head(L) = f.proj_hp * weights_hp.mean_rho;
    a.segment(L, L) = f.proj_hpp * weights_hpp.mean_rho;
    a[2 * L] = weights_hp.unstabilized_weight(f.t);
    a[2 * L + 1] = weights_hpp.unstabilized_weight(f.t);
    out.push_back(std::move(a));
  }
  return out;
}

double mean_single_period_weight(const WeightSeries& series) {
  if (series.single_log_rho.empty()) throw InvalidArgument("no single-period weights");
  double acc = 0.0;
  for (double v : series.single_log_rho) acc += std::exp(v);
  return acc / static_cast<double>(series.single_log_rho.size());
}

Eigen::MatrixXd make_Q(QMode mode, int L, const WeightSeries& weights_hp, const WeightSeries& weights_hpp) {
  const int dim = 2 * L + 2;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(dim, dim);
  if (mode == QMode::kIdentity) return Q;
  auto mean_multi = [](const WeightSeries& w) {
    double acc = 0.0;
    for (int t = w.first_t(); t <= w.last_t(); ++t) acc += w.unstabilized_weight(t);
    return acc / static_cast<double>(w.size());
  };
  const double rho_hp = mean_multi(weights_hp);
  const double rho_hpp = mean_multi(weights_hpp);
  Q.block(0, 0, L, L) *= 1.0 / rho_hp;
  Q.block(L, L, L, L) *= 1.0 / rho_hpp;
  Q(2 * L, 2 * L) = std::pow(mean_single_period_weight(weights_hp), -weights_hp.M);
  Q(2 * L + 1, 2 * L + 1) = std::pow(mean_single_period_weight(weights_hpp), -weights_hpp.M);
  if (!Q.allFinite()) throw NumericalFailure("non-finite stabilization matrix Q");
  return Q;
}

Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m, double tol) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const auto& values = eig.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (values.minCoeff() < -tol * scale) {
    throw NumericalFailure("variance bound is not positive semidefinite");
  }
  if (values.minCoeff() >= 0.0) return sym;
  return eig.eigenvectors() * values.cwiseMax(0.0).asDiagonal() * eig.eigenvectors().transpose();
}

VarianceBound estimate_variance_bound(const std::vector<Eigen::VectorXd>& A, const CateFit& fit,
                                      const Eigen::MatrixXd& Q) {
  if (A.size() < 2) throw InvalidArgument("variance bound needs at least two usable periods");
  const Eigen::Index L = fit.beta_bar.size();
  const Eigen::Index dim = 2 * L + 2;
  VarianceBound out;
  out.n_eff = static_cast<int>(A.size());
  out.V_hat = Eigen::MatrixXd::Zero(dim, dim);
  for (const Eigen::VectorXd& a : A) {
    if (a.size() != dim) throw InvalidArgument("A vector has the wrong dimension");
    out.V_hat.noalias() += a * a.transpose();
  }
  out.V_hat /= static_cast<double>(A.size());

  out.J_hat = Eigen::MatrixXd::Zero(L, dim);
  out.J_hat.block(0, 0, L, L).setIdentity();
  out.J_hat.block(0, L, L, L) = -Eigen::MatrixXd::Identity(L, L);
  out.J_hat.col(2 * L) = -mean_projection(fit, false);
  out.J_hat.col(2 * L + 1) = mean_projection(fit, true);
  out.Q = Q;
  const Eigen::MatrixXd JQ = out.J_hat * Q;
  const Eigen::MatrixXd sigma = JQ * out.V_hat * JQ.transpose();
  if (!sigma.allFinite()) throw NumericalFailure("non-finite variance bound");
  out.Sigma_hat = project_psd(sigma);
  return out;
}

VarianceBound estimate_variance_bound(const CateFit& fit, const WeightSeries& weights_hp,
                                      const WeightSeries& weights_hpp, QMode mode) {
  const auto A = build_A_vectors(fit, weights_hp, weights_hpp);
  const auto L = static_cast<int>(fit.beta_bar.size());
  VarianceBound out = estimate_variance_bound(A, fit, make_Q(mode, L, weights_hp, weights_hpp));
  out.q_mode = mode;
  return out;
}

Eigen::MatrixXd estimate_variance_bound_ipw(const std::vector<TimeFit>& fits) {
  if (fits.empty()) throw InvalidArgument("no per-period fits");
  const Eigen::Index L = fits.front().beta.size();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(L, L);
  for (const TimeFit& f : fits) v.noalias() += f.beta * f.beta.transpose();
  return v / static_cast<double>(fits.size());
}

VarianceBound ipw_variance_bound(const CateFit& fit) {
  VarianceBound out;
  out.Sigma_hat = estimate_variance_bound_ipw(fit.periods);
  out.n_eff = fit.n_eff();
  return out;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double chi_square_quantile(double p, int dof) {
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

double chi_square_upper_tail(double x, int dof) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), x));
}

double cate_standard_error(const CateFit& fit, const VarianceBound& bound, double r) {
  const Eigen::VectorXd z = fit.basis.evaluate(r);
  const double var = z.dot(bound.Sigma_hat * z) / bound.n_eff;
  return std::abs(fit.district_scale) * std::sqrt(std::max(0.0, var));
}

Interval cate_confidence_interval(const CateFit& fit, const VarianceBound& bound, double r, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  const double center = evaluate_cate(fit, r);
  const double half = normal_quantile(0.5 + 0.5 * level) * cate_standard_error(fit, bound, r);
  return {center - half, center + half};
}

HeterogeneityTest test_no_heterogeneity(const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma, int n_eff) {
  if (sigma.rows() != beta.size() || sigma.cols() != beta.size()) {
    throw InvalidArgument("bound block does not match tested coefficients");
  }
  if (n_eff < 1) throw InvalidArgument("n_eff must be positive");
  HeterogeneityTest out;
  out.dof = static_cast<int>(beta.size());
  if ((beta.array() == 0.0).all()) return out;
  out.T_c = n_eff * quad_inverse(beta, sigma);
  out.p_value = chi_square_upper_tail(out.T_c, out.dof);
  return out;
}

HeterogeneityTest test_no_heterogeneity(const CateFit& fit, const VarianceBound& bound) {
  return test_no_heterogeneity(slope_block(fit.beta_bar, fit.basis), slope_block(bound.Sigma_hat, fit.basis),
                               bound.n_eff);
}

bool confidence_set_member(const Eigen::VectorXd& candidate, const Eigen::VectorXd& beta_bar,
                           const Eigen::MatrixXd& sigma, int n_eff, double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  const Eigen::VectorXd diff = beta_bar - candidate;
  const double threshold = chi_square_quantile(level, static_cast<int>(diff.size()));
  if ((diff.array() == 0.0).all()) return true;
  return n_eff * quad_inverse(diff, sigma) < threshold;
}

Eigen::VectorXd slope_block(const Eigen::VectorXd& v, const BasisSpec& basis) {
  return v.tail(basis.L());
}

Eigen::MatrixXd slope_block(const Eigen::MatrixXd& m, const BasisSpec& basis) {
  return m.bottomRightCorner(basis.L(), basis.L());
}

}  // namespace stcate

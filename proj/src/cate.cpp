#include "stcate/cate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stcate/error.hpp"

namespace stcate {

namespace {

constexpr double kRankTolerance = 1e-10;

double type7(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

}  // namespace

LeastSquaresProjector::LeastSquaresProjector(const Eigen::MatrixXd& Z, RankPolicy policy)
    : rows_(Z.rows()) {
  if (Z.rows() < Z.cols()) {
    throw RankDeficient("design has fewer rows than columns", {});
  }
  qr_.setThreshold(kRankTolerance);
  qr_.compute(Z);
  const auto diag = qr_.matrixR().diagonal().cwiseAbs();
  const Eigen::Index rank = qr_.rank();
  if (rank < Z.cols()) {
    if (policy == RankPolicy::kError) {
      std::vector<int> cols;
      std::ostringstream msg;
      msg << "rank-deficient moderator design (rank " << rank << " of " << Z.cols()
          << "); dependent columns:";
      for (Eigen::Index j = rank; j < Z.cols(); ++j) {
        cols.push_back(static_cast<int>(qr_.colsPermutation().indices()[j]));
        msg << ' ' << cols.back();
      }
      throw RankDeficient(msg.str(), std::move(cols));
    }
    cod_.emplace(Z);
    cod_->setThreshold(kRankTolerance);
    cod_->compute(Z);
    condition_ = std::numeric_limits<double>::infinity();
    return;
  }
  condition_ = diag.size() == 0 ? 1.0 : diag.maxCoeff() / diag.minCoeff();
}

Eigen::VectorXd LeastSquaresProjector::apply(const Eigen::VectorXd& y) const {
  if (y.size() != rows_) throw InvalidArgument("response length does not match design rows");
  if (cod_) return cod_->solve(y);
  return qr_.solve(y);
}

TimeFit fit_time_beta(const Eigen::MatrixXd& Z, const Eigen::VectorXd& effect, int t, RankPolicy policy) {
  const LeastSquaresProjector proj(Z, policy);
  TimeFit fit;
  fit.t = t;
  fit.beta = proj.apply(effect);
  fit.condition = proj.condition();
  fit.minimum_norm = proj.minimum_norm();
  return fit;
}

TimeFit fit_time_beta(const LeastSquaresProjector& projector, const Eigen::VectorXd& outcome_hp,
                      const Eigen::VectorXd& outcome_hpp, int t) {
  TimeFit fit;
  fit.t = t;
  fit.proj_hp = projector.apply(outcome_hp);
  fit.proj_hpp = projector.apply(outcome_hpp);
  fit.beta = fit.proj_hpp - fit.proj_hp;
  fit.condition = projector.condition();
  fit.minimum_norm = projector.minimum_norm();
  return fit;
}

CateFit average_beta(std::vector<TimeFit> fits, const BasisSpec& basis) {
  if (fits.empty()) throw InvalidArgument("no per-period fits to average");
  CateFit out;
  out.basis = basis;
  out.beta_bar = Eigen::VectorXd::Zero(fits.front().beta.size());
  for (const TimeFit& f : fits) {
    if (f.beta.size() != out.beta_bar.size()) throw InvalidArgument("coefficient lengths differ");
    out.beta_bar += f.beta;
  }
  out.beta_bar /= static_cast<double>(fits.size());
  out.periods = std::move(fits);
  return out;
}

double evaluate_cate(const CateFit& fit, double r) {
  return fit.district_scale * fit.basis.evaluate(r).dot(fit.beta_bar);
}

bool is_extrapolation(const CateFit& fit, double r) { return r < fit.support_lo || r > fit.support_hi; }

CateFit fit_cate(const ModeratorPanel& moderator, const PseudoOutcomePanel& panel_hp,
                 const PseudoOutcomePanel& panel_hpp, int M, const BasisSpec& basis,
                 const CateOptions& options) {
  const Eigen::MatrixXd effect = pseudo_effect(panel_hpp, panel_hp);
  if (panel_hp.first_t != M) throw InvalidArgument("panels must start at period M");
  std::vector<TimeFit> fits;
  std::vector<double> used;
  std::optional<LeastSquaresProjector> shared;
  for (int j = 0; j < effect.cols(); ++j) {
    const int t = panel_hp.first_t + j;
    const Eigen::VectorXd r = moderator.column(moderator.time_invariant() ? 1 : t - M + 1);
    used.insert(used.end(), r.data(), r.data() + r.size());
    const Eigen::MatrixXd Z = build_basis_matrix(moderator, t, M, basis);
    if (moderator.time_invariant()) {
      if (!shared) shared.emplace(Z, options.rank_policy);
      fits.push_back(fit_time_beta(*shared, panel_hp.values.col(j), panel_hpp.values.col(j), t));
    } else {
      const LeastSquaresProjector proj(Z, options.rank_policy);
      fits.push_back(fit_time_beta(proj, panel_hp.values.col(j), panel_hpp.values.col(j), t));
    }
  }
  CateFit fit = average_beta(std::move(fits), basis);
  fit.M = M;
  fit.mode = panel_hp.mode;
  fit.hp_id = panel_hp.intervention_id;
  fit.hpp_id = panel_hpp.intervention_id;
  fit.district_scale = options.district_scale;
  fit.support_lo = type7(used, 0.025);
  fit.support_hi = type7(used, 0.975);
  return fit;
}

}  // namespace stcate

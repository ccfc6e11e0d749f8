#include "stcate/propensity.hpp"

#include <algorithm>
#include <cmath>

#include "stcate/error.hpp"

namespace stcate {

CovariateStack::CovariateStack(GridShape shape, std::vector<std::string> names)
    : shape_(shape), names_(std::move(names)), stacked_(0, static_cast<Eigen::Index>(names_.size())) {
  if (names_.empty()) throw InvalidArgument("covariate stack needs at least one covariate");
}

void CovariateStack::add_period(std::span<const Raster> surfaces) {
  if (surfaces.size() != names_.size()) {
    throw InvalidArgument("expected one raster per covariate");
  }
  Eigen::MatrixXd block(static_cast<Eigen::Index>(shape_.size()), covariate_count());
  for (std::size_t k = 0; k < surfaces.size(); ++k) {
    if (!(surfaces[k].shape() == shape_)) {
      throw InvalidArgument("covariate '" + names_[k] + "' is on a different grid");
    }
    for (std::size_t c = 0; c < shape_.size(); ++c) {
      block(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) = surfaces[k][c];
    }
  }
  add_period(block);
}

void CovariateStack::add_period(const Eigen::MatrixXd& block) {
  const auto cells = static_cast<Eigen::Index>(shape_.size());
  if (block.rows() != cells || block.cols() != covariate_count()) {
    throw InvalidArgument("covariate block has the wrong shape");
  }
  if (!block.allFinite()) throw InvalidArgument("covariate values must be finite");
  const Eigen::Index used = static_cast<Eigen::Index>(periods_) * cells;
  if (stacked_.rows() < used + cells) {
    stacked_.conservativeResize(std::max(used + cells, 2 * stacked_.rows()), Eigen::NoChange);
  }
  stacked_.middleRows(used, cells) = block;
  ++periods_;
}

Eigen::Block<const Eigen::MatrixXd> CovariateStack::design(int t) const {
  if (t < 1 || t > periods_) {
    throw InvalidArgument("covariate period " + std::to_string(t) + " out of range");
  }
  const auto cells = static_cast<Eigen::Index>(shape_.size());
  return stacked_.middleRows((t - 1) * cells, cells);
}

Eigen::VectorXd CovariateStack::at(int t, Location loc) const {
  return design(t).row(static_cast<Eigen::Index>(shape_.cell_index(loc))).transpose();
}

Raster CovariateStack::covariate(int t, int k) const {
  auto block = design(t);
  Raster out(shape_);
  for (std::size_t c = 0; c < shape_.size(); ++c) out[c] = block(static_cast<Eigen::Index>(c), k);
  return out;
}

int CovariateStack::intercept_index() const {
  for (int k = 0; k < covariate_count(); ++k) {
    const auto used = static_cast<Eigen::Index>(periods_) * static_cast<Eigen::Index>(shape_.size());
    if (used > 0 && (stacked_.col(k).head(used).array() == 1.0).all()) return k;
  }
  return -1;
}

PropensityLikelihood::PropensityLikelihood(std::shared_ptr<const CovariateStack> covariates,
                                           std::span<const PointPattern> treatments, int t_begin,
                                           int t_end)
    : covariates_(std::move(covariates)), t_begin_(t_begin), t_end_(t_end) {
  const CovariateStack& stack = *covariates_;
  if (t_end_ < 0) t_end_ = stack.periods();
  if (t_begin_ < 1 || t_end_ < t_begin_ || t_end_ > stack.periods()) {
    throw InvalidArgument("propensity fit period range is invalid");
  }
  if (static_cast<int>(treatments.size()) < t_end_) {
    throw InvalidArgument("fewer treatment patterns than fitted periods");
  }
  event_sum_ = Eigen::VectorXd::Zero(stack.covariate_count());
  for (int t = t_begin_; t <= t_end_; ++t) {
    const PointPattern& w = treatments[static_cast<std::size_t>(t - 1)];
    auto block = stack.design(t);
    for (const Location& s : w.points) {
      event_sum_ += block.row(static_cast<Eigen::Index>(stack.shape().cell_index(s))).transpose();
    }
    events_ += static_cast<long>(w.size());
  }
}

Eigen::VectorXd PropensityLikelihood::linear_predictor(const Eigen::VectorXd& gamma) const {
  const CovariateStack& stack = *covariates_;
  const auto cells = static_cast<Eigen::Index>(stack.shape().size());
  Eigen::VectorXd eta(cells * period_count());
  for (int t = t_begin_; t <= t_end_; ++t) {
    eta.segment((t - t_begin_) * cells, cells).noalias() = stack.design(t) * gamma;
  }
  return eta.cwiseMax(-kExponentClamp).cwiseMin(kExponentClamp);
}

double PropensityLikelihood::value(const Eigen::VectorXd& gamma) const {
  const Eigen::VectorXd eta = linear_predictor(gamma);
  return gamma.dot(event_sum_) - covariates_->shape().cell_area() * eta.array().exp().sum();
}

Eigen::VectorXd PropensityLikelihood::gradient(const Eigen::VectorXd& gamma) const {
  const CovariateStack& stack = *covariates_;
  const auto cells = static_cast<Eigen::Index>(stack.shape().size());
  const Eigen::VectorXd rate = linear_predictor(gamma).array().exp();
  Eigen::VectorXd grad = event_sum_;
  const double a = stack.shape().cell_area();
  for (int t = t_begin_; t <= t_end_; ++t) {
    grad.noalias() -= a * (stack.design(t).transpose() * rate.segment((t - t_begin_) * cells, cells));
  }
  return grad;
}

Eigen::MatrixXd PropensityLikelihood::information(const Eigen::VectorXd& gamma) const {
  const CovariateStack& stack = *covariates_;
  const auto cells = static_cast<Eigen::Index>(stack.shape().size());
  const Eigen::VectorXd rate = linear_predictor(gamma).array().exp();
  const int k = stack.covariate_count();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(k, k);
  for (int t = t_begin_; t <= t_end_; ++t) {
    auto block = stack.design(t);
    const auto r = rate.segment((t - t_begin_) * cells, cells);
    info.noalias() += block.transpose() * r.asDiagonal() * block;
  }
  return info * stack.shape().cell_area();
}

FitReport fit_propensity(std::shared_ptr<const CovariateStack> covariates,
                         std::span<const PointPattern> treatments, const FitOptions& options) {
  const CovariateStack& stack = *covariates;
  PropensityLikelihood lik(covariates, treatments, options.t_begin, options.t_end);
  const int k = stack.covariate_count();

  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k);
  if (const int icpt = stack.intercept_index(); icpt >= 0 && lik.event_count() > 0) {
    gamma[icpt] = std::log(static_cast<double>(lik.event_count()) /
                           (lik.period_count() * stack.shape().window().area()));
  }

  Eigen::MatrixXd info = lik.information(gamma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    throw NumericalFailure("singular propensity information matrix (collinear covariates)");
  }
  Eigen::MatrixXd inv_curv = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));

  FitReport report;
  report.t_begin = options.t_begin;
  report.t_end = options.t_end < 0 ? stack.periods() : options.t_end;
  double f = lik.value(gamma);
  Eigen::VectorXd g = lik.gradient(gamma);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= options.tolerance) break;
    Eigen::VectorXd dir = inv_curv * g;
    if (g.dot(dir) <= 0.0) {
      // Curvature estimate lost definiteness; restart from the true information.
      inv_curv = lik.information(gamma).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
      dir = inv_curv * g;
    }
    double step = 1.0;
    Eigen::VectorXd next;
    double f_next = 0.0;
    Eigen::VectorXd g_next;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries, step *= 0.5) {
      next = gamma + step * dir;
      f_next = lik.value(next);
      if (!std::isfinite(f_next)) continue;
      if (f_next >= f + 1e-4 * step * g.dot(dir)) {
        accepted = true;
      } else if (std::abs(f_next - f) <= 1e-12 * std::max(1.0, std::abs(f))) {
        // Within rounding of the objective: judge by the score instead.
        g_next = lik.gradient(next);
        accepted = g_next.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>();
      }
      if (accepted) break;
    }
    if (!accepted) break;
    if (g_next.size() == 0) g_next = lik.gradient(next);
    const Eigen::VectorXd s = next - gamma;
    const Eigen::VectorXd y = g - g_next;  // gradient change of -loglik
    const double sy = s.dot(y);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(k, k) - rho * s * y.transpose();
      inv_curv = left * inv_curv * left.transpose() + rho * s * s.transpose();
    }
    gamma = std::move(next);
    f = f_next;
    g = std::move(g_next);
  }

  report.gamma_hat = gamma;
  report.log_likelihood = f;
  report.gradient_norm = g.lpNorm<Eigen::Infinity>();
  report.iterations = iter;
  report.converged = report.gradient_norm <= options.tolerance;
  report.observed_information = lik.information(gamma);
  return report;
}

PropensityModel::PropensityModel(std::shared_ptr<const CovariateStack> covariates,
                                 Eigen::VectorXd gamma)
    : covariates_(std::move(covariates)), gamma_(std::move(gamma)) {
  if (gamma_.size() != covariates_->covariate_count()) {
    throw InvalidArgument("propensity coefficient count does not match covariates");
  }
}

IntensitySurface PropensityModel::intensity(int t, ClampDiagnostics* diagnostics) const {
  const Eigen::VectorXd eta = covariates_->design(t) * gamma_;
  Raster out(covariates_->shape());
  long clamped = 0;
  for (Eigen::Index c = 0; c < eta.size(); ++c) {
    double e = eta[c];
    if (e > kExponentClamp || e < -kExponentClamp) {
      ++clamped;
      e = std::clamp(e, -kExponentClamp, kExponentClamp);
    }
    out[static_cast<std::size_t>(c)] = std::exp(e);
  }
  if (diagnostics != nullptr) diagnostics->clamped_cells += clamped;
  return IntensitySurface(std::move(out));
}

IntensitySurface evaluate_propensity_intensity(const PropensityModel& model, int t,
                                               ClampDiagnostics* diagnostics) {
  return model.intensity(t, diagnostics);
}

double integrate_over(const Raster& raster, double x_lo, double x_hi, double y_lo, double y_hi) {
  const GridShape& shape = raster.shape();
  const Window& win = shape.window();
  x_lo = std::max(x_lo, win.x_min());
  x_hi = std::min(x_hi, win.x_max());
  y_lo = std::max(y_lo, win.y_min());
  y_hi = std::min(y_hi, win.y_max());
  if (!(x_hi > x_lo) || !(y_hi > y_lo)) return 0.0;
  const double w = shape.cell_width();
  const double h = shape.cell_height();
  const int ix0 = std::max(0, static_cast<int>(std::floor((x_lo - win.x_min()) / w)));
  const int ix1 = std::min(shape.nx() - 1, static_cast<int>(std::floor((x_hi - win.x_min()) / w)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((y_lo - win.y_min()) / h)));
  const int iy1 = std::min(shape.ny() - 1, static_cast<int>(std::floor((y_hi - win.y_min()) / h)));
  double total = 0.0;
  for (int iy = iy0; iy <= iy1; ++iy) {
    const double cy0 = win.y_min() + iy * h;
    const double oy = std::min(y_hi, cy0 + h) - std::max(y_lo, cy0);
    if (oy <= 0.0) continue;
    for (int ix = ix0; ix <= ix1; ++ix) {
      const double cx0 = win.x_min() + ix * w;
      const double ox = std::min(x_hi, cx0 + w) - std::max(x_lo, cx0);
      if (ox <= 0.0) continue;
      total += raster[static_cast<std::size_t>(iy) * shape.nx() + ix] * ox * oy;
    }
  }
  return total;
}

std::vector<double> predict_counts(const PropensityModel& model, int t_begin, int t_end,
                                   const Rect& region) {
  std::vector<double> out;
  for (int t = t_begin; t <= t_end; ++t) {
    const IntensitySurface e = model.intensity(t);
    out.push_back(integrate_over(e.raster(), region.x_lo, region.x_hi, region.y_lo, region.y_hi));
  }
  return out;
}

std::vector<double> predict_counts(const PropensityModel& model, int t_begin, int t_end,
                                   const PixelGrid& grid, std::span<const std::size_t> pixels) {
  if (pixels.empty()) throw InvalidArgument("prediction region has no pixels");
  std::vector<double> out;
  for (int t = t_begin; t <= t_end; ++t) {
    const IntensitySurface e = model.intensity(t);
    double sum = 0.0;
    for (std::size_t p : pixels) {
      const Window b = grid.bounds(p);
      sum += integrate_over(e.raster(), b.x_min(), b.x_max(), b.y_min(), b.y_max());
    }
    out.push_back(sum);
  }
  return out;
}

}  // namespace stcate

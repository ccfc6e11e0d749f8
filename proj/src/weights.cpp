#include "stcate/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stcate/error.hpp"

namespace stcate {

InterventionSpec::InterventionSpec(IntensitySurface phi, double c, int M, std::string id)
    : phi_(std::move(phi)), c_(c), M_(M), id_(std::move(id)), h_(phi_.scaled(c > 0.0 ? c : 0.0)) {
  if (std::abs(phi_.total() - 1.0) > 1e-10) {
    throw InvalidArgument("intervention baseline density must integrate to one");
  }
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("intervention scale c must be > 0");
  if (M < 1) throw InvalidArgument("intervention duration M must be >= 1");
}

double WeightSeries::weight(int t) const {
  if (t < first_t() || t > last_t()) {
    throw InvalidArgument("weight period " + std::to_string(t) + " out of range");
  }
  return std::exp(log_rho[static_cast<std::size_t>(t - M)]);
}

std::vector<double> WeightSeries::weights() const {
  std::vector<double> out(log_rho.size());
  std::transform(log_rho.begin(), log_rho.end(), out.begin(), [](double v) { return std::exp(v); });
  return out;
}

std::string WeightSeries::flags() const {
  std::string f = "raw";
  if (truncated) f += ";truncated(" + std::to_string(truncation_q) + ")";
  if (stabilized) f += ";stabilized";
  return f;
}

std::vector<double> single_period_log_ratios(const IntensitySurface& intervention,
                                             const DenominatorFn& denominator,
                                             std::span<const PointPattern> treatments) {
  std::vector<double> out;
  out.reserve(treatments.size());
  for (std::size_t j = 0; j < treatments.size(); ++j) {
    const int t = static_cast<int>(j) + 1;
    PointPattern w = treatments[j];
    w.t = t;
    out.push_back(log_density_ratio(w, intervention, denominator(t)));
  }
  return out;
}

WeightSeries compute_log_weights(const InterventionSpec& intervention,
                                 const DenominatorFn& denominator,
                                 std::span<const PointPattern> treatments) {
  const int T = static_cast<int>(treatments.size());
  const int M = intervention.M();
  if (T < M) throw InvalidArgument("need at least M periods of treatments");
  WeightSeries series;
  series.M = M;
  series.single_log_rho = single_period_log_ratios(intervention.intensity(), denominator, treatments);
  series.log_rho.reserve(static_cast<std::size_t>(T - M + 1));
  for (int t = M; t <= T; ++t) {
    double sum = 0.0;
    for (int j = t - M + 1; j <= t; ++j) sum += series.single_log_rho[static_cast<std::size_t>(j - 1)];
    series.log_rho.push_back(sum);
  }
  return series;
}

WeightSeries compute_log_weights(const InterventionSpec& intervention, const PropensityModel& model,
                                 std::span<const PointPattern> treatments) {
  return compute_log_weights(
      intervention, [&model](int t) { return model.intensity(t); }, treatments);
}

double log_quantile_type7(std::span<const double> log_values, double q) {
  if (log_values.empty()) throw InvalidArgument("quantile of an empty series");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::vector<double> sorted(log_values.begin(), log_values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= sorted.size() || frac == 0.0) return sorted[lo];
  const double a = sorted[lo];
  const double b = sorted[lo + 1];
  if (a == -std::numeric_limits<double>::infinity()) {
    return b == a ? a : std::log(frac) + b;
  }
  // log(w_a + frac * (w_b - w_a)) without leaving log space.
  return a + std::log1p(frac * std::expm1(b - a));
}

WeightSeries truncate_weights(const WeightSeries& series, double q) {
  if (!(q > 0.0 && q <= 1.0)) throw InvalidArgument("truncation quantile must lie in (0, 1]");
  if (series.stabilized) throw InvalidArgument("truncate before stabilizing");
  WeightSeries out = series;
  out.truncated = true;
  out.truncation_q = q;
  if (q == 1.0) return out;
  const double cap = log_quantile_type7(series.log_rho, q);
  for (double& v : out.log_rho) v = std::min(v, cap);
  return out;
}

WeightSeries stabilize_hajek(const WeightSeries& series) {
  if (series.log_rho.empty()) throw InvalidArgument("cannot stabilize an empty series");
  const double top = *std::max_element(series.log_rho.begin(), series.log_rho.end());
  if (top == -std::numeric_limits<double>::infinity()) {
    throw NumericalFailure("all weights are zero; Hájek stabilization undefined");
  }
  if (!std::isfinite(top)) throw NumericalFailure("non-finite log weight");
  double acc = 0.0;
  for (double v : series.log_rho) acc += std::exp(v - top);
  const double log_mean = top + std::log(acc / static_cast<double>(series.log_rho.size()));
  WeightSeries out = series;
  out.stabilized = true;
  out.mean_rho = series.mean_rho * std::exp(log_mean);
  for (double& v : out.log_rho) v -= log_mean;
  return out;
}

Eigen::MatrixXd outcome_count_matrix(std::span<const PointPattern> outcomes, const PixelGrid& grid) {
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.pixel_count()),
                                                 static_cast<Eigen::Index>(outcomes.size()));
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    for (const Location& loc : outcomes[t].points) {
      counts(static_cast<Eigen::Index>(grid.pixel_of(loc)), static_cast<Eigen::Index>(t)) += 1.0;
    }
  }
  return counts;
}

PseudoOutcomePanel build_pseudo_outcomes(const WeightSeries& series, const Eigen::MatrixXd& counts,
                                         const PixelGrid& grid, std::string intervention_id) {
  if (counts.rows() != static_cast<Eigen::Index>(grid.pixel_count())) {
    throw InvalidArgument("outcome counts do not match the pixel grid");
  }
  if (counts.cols() != series.last_t()) {
    throw InvalidArgument("outcome periods (" + std::to_string(counts.cols()) +
                          ") misaligned with weight periods " + std::to_string(series.first_t()) +
                          ".." + std::to_string(series.last_t()));
  }
  PseudoOutcomePanel panel{Eigen::MatrixXd(counts.rows(), static_cast<Eigen::Index>(series.size())),
                           series.first_t(), std::move(intervention_id),
                           series.stabilized ? WeightingMode::kHajek : WeightingMode::kIpw, grid};
  for (int t = series.first_t(); t <= series.last_t(); ++t) {
    panel.values.col(t - series.first_t()) = series.weight(t) * counts.col(t - 1);
  }
  if (!panel.values.allFinite()) throw NumericalFailure("non-finite pseudo-outcome");
  return panel;
}

PseudoOutcomePanel build_pseudo_outcomes(const WeightSeries& series,
                                         std::span<const PointPattern> outcomes,
                                         const PixelGrid& grid, std::string intervention_id) {
  return build_pseudo_outcomes(series, outcome_count_matrix(outcomes, grid), grid,
                               std::move(intervention_id));
}

Eigen::MatrixXd pseudo_effect(const PseudoOutcomePanel& panel_hpp, const PseudoOutcomePanel& panel_hp) {
  if (panel_hpp.mode != panel_hp.mode) throw InvalidArgument("pseudo-outcome weighting modes differ");
  if (panel_hpp.first_t != panel_hp.first_t || panel_hpp.values.rows() != panel_hp.values.rows() ||
      panel_hpp.values.cols() != panel_hp.values.cols() || !(panel_hpp.grid == panel_hp.grid)) {
    throw InvalidArgument("pseudo-outcome panels have different shapes");
  }
  return panel_hpp.values - panel_hp.values;
}

}  // namespace stcate

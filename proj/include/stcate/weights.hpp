#pragma once

// Stochastic interventions, multi-period importance weights and pseudo-outcome
// panels. Weights stay in log space until a panel is built.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stcate/point_process.hpp"
#include "stcate/propensity.hpp"
#include "stcate/spatial.hpp"

namespace stcate {

/// Poisson intervention with intensity c * phi applied independently over M
/// consecutive periods. phi integrates to one.
class InterventionSpec {
 public:
  InterventionSpec(IntensitySurface phi, double c, int M, std::string id = {});

  const IntensitySurface& phi() const { return phi_; }
  double c() const { return c_; }
  int M() const { return M_; }
  const std::string& id() const { return id_; }
  /// h = c * phi.
  const IntensitySurface& intensity() const { return h_; }

 private:
  IntensitySurface phi_;
  double c_;
  int M_;
  std::string id_;
  IntensitySurface h_;
};

/// Propensity intensity for period t (1-based).
using DenominatorFn = std::function<IntensitySurface(int t)>;

/// log rho_t for t = M..T, plus the single-period log ratios for t = 1..T.
struct WeightSeries {
  int M = 1;
  std::vector<double> log_rho;         // index t - M
  std::vector<double> single_log_rho;  // index t - 1
  bool truncated = false;
  double truncation_q = 1.0;
  bool stabilized = false;
  /// Mean weight removed by stabilization; 1 when not stabilized.
  double mean_rho = 1.0;

  int first_t() const { return M; }
  int last_t() const { return M + static_cast<int>(log_rho.size()) - 1; }
  std::size_t size() const { return log_rho.size(); }
  double weight(int t) const;
  /// Weight before Hájek stabilization (after truncation, if any).
  double unstabilized_weight(int t) const { return weight(t) * mean_rho; }
  std::vector<double> weights() const;
  std::string flags() const;
};

/// Single-period log density ratios log f_h(W_t) / e_t(W_t), t = 1..T.
std::vector<double> single_period_log_ratios(const IntensitySurface& intervention,
                                             const DenominatorFn& denominator,
                                             std::span<const PointPattern> treatments);

/// log rho_t = sum_{j=t-M+1}^{t} log f_h(W_j) / e_j(W_j) for t = M..T.
WeightSeries compute_log_weights(const InterventionSpec& intervention,
                                 const DenominatorFn& denominator,
                                 std::span<const PointPattern> treatments);
WeightSeries compute_log_weights(const InterventionSpec& intervention, const PropensityModel& model,
                                 std::span<const PointPattern> treatments);

/// Type-7 sample quantile (linear interpolation between order statistics) of
/// exp(log_values), returned in log space.
double log_quantile_type7(std::span<const double> log_values, double q);

/// Caps weights at their empirical q-quantile. q = 1 is the identity.
WeightSeries truncate_weights(const WeightSeries& series, double q);
/// Divides weights by their mean so the result averages to one.
WeightSeries stabilize_hajek(const WeightSeries& series);

enum class WeightingMode { kIpw, kHajek };

struct PseudoOutcomePanel {
  Eigen::MatrixXd values;  // pixels x (T - M + 1); column j is period M + j
  int first_t = 1;
  std::string intervention_id;
  WeightingMode mode = WeightingMode::kIpw;
  PixelGrid grid;

  int last_t() const { return first_t + static_cast<int>(values.cols()) - 1; }
};

/// Pixel counts N_{S_i}(Y_t) as a pixels x T matrix (column t - 1).
Eigen::MatrixXd outcome_count_matrix(std::span<const PointPattern> outcomes, const PixelGrid& grid);

/// Y~_it = weight_t * N_{S_i}(Y_t). `outcomes` covers periods 1..T with T equal
/// to series.last_t().
PseudoOutcomePanel build_pseudo_outcomes(const WeightSeries& series,
                                         std::span<const PointPattern> outcomes,
                                         const PixelGrid& grid, std::string intervention_id = {});
PseudoOutcomePanel build_pseudo_outcomes(const WeightSeries& series, const Eigen::MatrixXd& counts,
                                         const PixelGrid& grid, std::string intervention_id = {});

/// D~ = panel(h'') - panel(h').
Eigen::MatrixXd pseudo_effect(const PseudoOutcomePanel& panel_hpp, const PseudoOutcomePanel& panel_hp);

}  // namespace stcate

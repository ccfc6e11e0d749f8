#pragma once

// Replication runner for the simulation study. Each replication generates a
// panel, fits the propensity model, runs every estimator variant of every
// scenario and compares against that replication's oracle truth. Results are
// reduced in replication order, so reports do not depend on thread count.

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "stcate/basis.hpp"
#include "stcate/inference.hpp"
#include "stcate/rng.hpp"
#include "stcate/sim/dgp.hpp"
#include "stcate/weights.hpp"

namespace stcate::sim {

struct EstimatorVariant {
  std::string name;
  WeightingMode mode = WeightingMode::kHajek;
  bool true_ps = false;
  double truncation_q = 1.0;  // 1 = untruncated
};

/// {ipw, hajek} x {true, estimated, truncated}; truncation uses the estimated PS.
std::vector<EstimatorVariant> default_variants(double truncation_q = 0.95);
EstimatorVariant variant_from_name(const std::string& name, double truncation_q);

struct Scenario {
  std::string name;
  DgpConfig dgp;
  int M = 1;
  double c_hp = 3.0;
  double c_hpp = 7.0;
  BasisSpec basis = BasisSpec::binary();
  std::vector<double> r_grid{0.0, 1.0};
  std::vector<EstimatorVariant> variants = default_variants();
  double level = 0.95;
  double test_alpha = 0.05;
  QMode q_mode = QMode::kAppendixD;
  bool oracle = true;
  int oracle_K = 100;

  void validate() const;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 1;
  int n_reps = 200;
  int threads = 1;
  std::vector<Scenario> scenarios;
};

/// Parses {"master_seed", "n_reps", "threads", "scenarios": [...], "grid": {...}}.
/// A scenario's "dgp" is an inline object or a path relative to `base_dir`.
/// "grid" expands {"M": [...], "c_pairs": [[c', c''], ...]} over a template.
ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const Scenario& scenario);
/// Switches every scenario to T = 500 and the run to 500 replications.
void apply_paper_scale(ExperimentConfig& config);

/// Stream of the panel for replication `rep` under `dgp`.
SeedStream panel_stream(std::uint64_t master_seed, int rep, const DgpConfig& dgp);
/// Stream of the oracle draws for replication `rep` of a scenario.
SeedStream oracle_stream(std::uint64_t master_seed, int rep, const Scenario& scenario);

/// Intervention base density phi: KDE of every treatment event of the panel.
IntensitySurface intervention_density(const SimPanel& panel);

/// Intervention base density from an independent pilot panel, so that phi does
/// not depend on the treatments it reweights.
IntensitySurface pilot_intervention_density(const DgpConfig& dgp, std::shared_ptr<const SpatialSurfaces> surfaces,
                                            std::uint64_t master_seed);

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct VariantRun {
  bool ok = false;
  std::string error;
  Eigen::VectorXd beta;
  Eigen::VectorXd bound_var;  // diag(Sigma) / n_eff
  std::vector<double> estimate, lo, hi, se;  // on the r grid
  double T_c = kNaN;
  double p_value = kNaN;
  double mean_weight_hp = kNaN;   // mean unstabilized weight
  double mean_weight_hpp = kNaN;
};

struct ScenarioRun {
  bool ok = false;
  std::string error;
  Eigen::VectorXd truth_beta;     // empty without an oracle
  Eigen::VectorXd truth_beta_se;
  std::vector<double> truth;      // on the r grid; NaN without an oracle
  std::vector<VariantRun> variants;
  double seconds = 0.0;
};

/// One replication of one scenario. `estimated` is the fitted propensity
/// model, or nullptr when the fit failed (estimated-PS variants then fail with
/// `fit_error`).
ScenarioRun run_scenario_replication(const Scenario& scenario, const SimPanel& panel, const IntensitySurface& phi,
                                     const PropensityModel* estimated, const std::string& fit_error,
                                     std::uint64_t master_seed, int rep);

struct CurvePoint {
  double r = 0.0;
  double truth = kNaN;          // mean oracle truth
  double mean_estimate = kNaN;
  double bias = kNaN;           // mean(estimate - truth)
  double coverage = kNaN;
  double mc_sd = kNaN;          // SD of the estimate across replications
  double mean_se = kNaN;        // mean estimated standard error
  int n = 0;
};

struct VariantSummary {
  std::string name;
  int n_ok = 0;
  std::vector<std::pair<int, std::string>> failures;
  std::vector<CurvePoint> curve;
  // Per coefficient, across replications.
  Eigen::VectorXd beta_mean, beta_sd, truth_beta_mean, truth_beta_sd, diff_sd, oracle_se_rms, bound_sd;
  int test_count = 0;
  double rejection_rate = kNaN;
};

struct ScenarioSummary {
  Scenario scenario;
  int n_reps = 0;
  int n_ok = 0;
  std::vector<std::pair<int, std::string>> failures;  // whole-replication failures
  std::vector<VariantSummary> variants;
  double seconds = 0.0;  // summed over replications; not part of the report
};

struct ExperimentReport {
  std::uint64_t master_seed = 0;
  int n_reps = 0;
  std::vector<ScenarioSummary> scenarios;

  const ScenarioSummary& scenario(const std::string& name) const;
  const VariantSummary& variant(const std::string& scenario_name, const std::string& variant_name) const;
};

ExperimentReport run_experiment(const ExperimentConfig& config);
ScenarioSummary summarize(const Scenario& scenario, const std::vector<ScenarioRun>& runs);

/// Deterministic report content (no timing).
nlohmann::json report_json(const ExperimentReport& report);
std::string curves_csv(const ExperimentReport& report);
/// Writes report.json, curves.csv and timing.json into `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace stcate::sim

#pragma once

// Monte Carlo ground truth for the time-averaged projected CATE of a simulated
// panel. For each usable period t and draw k, treatments at t-M+1..t are
// replaced by draws from the intervention; earlier history stays factual.
// Both interventions share one draw from the larger process, thinned for the
// smaller one, so their difference has low Monte Carlo noise. The final-period
// outcome enters through its expected pixel counts rather than a sampled
// pattern.

#include <vector>

#include <Eigen/Dense>

#include "stcate/basis.hpp"
#include "stcate/point_process.hpp"
#include "stcate/rng.hpp"
#include "stcate/sim/dgp.hpp"

namespace stcate::sim {

struct OracleOptions {
  int K = 100;
};

struct OracleResult {
  Eigen::VectorXd beta;     // mean over draws of the time-averaged coefficients
  Eigen::VectorXd beta_se;  // SD over draws / sqrt(K)
  Eigen::MatrixXd draws;    // K x columns, time-averaged coefficients per draw
  int K = 0;
  int periods = 0;

  /// Truth z(r)' beta and its Monte Carlo standard error.
  double tau(const BasisSpec& basis, double r) const;
  double tau_se(const BasisSpec& basis, double r) const;
};

/// Expected pixel counts of Y_t when W at t-M+1..t follows `cf` (one pattern
/// per period, oldest first). Intermediate outcomes are drawn from `rng` only
/// when they feed back into Y_t.
Eigen::VectorXd counterfactual_expected_counts(const SimPanel& panel, int t, const std::vector<PointPattern>& cf,
                                               Engine& rng);

OracleResult compute_oracle(const SimPanel& panel, const IntensitySurface& phi, double c_hp, double c_hpp, int M,
                            const BasisSpec& basis, const SeedStream& stream, const OracleOptions& options = {});

}  // namespace stcate::sim

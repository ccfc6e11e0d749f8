#pragma once

// Synthetic spatio-temporal data: confounder surfaces, treatment and outcome
// point patterns with lagged feedback, and the moderator panel.
//
// Treatment intensity:
//   exp(a0 + aX'X_t + aW W*_{t-1} + aY Y*_{t-1})
// Outcome intensity:
//   exp(g0 + gX'X_t + gW W*_{(t-lookback+1):t} + gY Y*_{t-1} + interaction)
// with smoothers P*(w) = exp(-decay * D(w; P)). The interaction is
//   spatial / binary / checkerboard:  g1 * R(w) * W*_{(t-lookback+1):t}(w)
//   spatio-temporal:                  sum_{j=1..4} g_j X3_{t-j}(w) W*_{t-j+1}(w)

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "stcate/point_process.hpp"
#include "stcate/propensity.hpp"
#include "stcate/rng.hpp"
#include "stcate/spatial.hpp"

namespace stcate::sim {

enum class ModeratorChoice {
  kSpatial,         // X2 at the pixel centroid
  kSpatioTemporal,  // X3_t at the pixel centroid
  kBinary,          // X2 at the centroid above its pixel median
  kCheckerboard,    // alternating pixels; unrelated to any DGP term
};

struct DgpConfig {
  std::string name = "default";
  int T = 300;
  double extent = 10.0;  // window [0, extent]^2
  int raster_n = 32;
  int pixel_n = 16;

  double rho0_x3 = -2.7;
  double rho1_x3 = 8.0;
  double rho0_x4 = -3.2;
  double rho1_x4 = 7.0;
  std::uint64_t base_density_seed = 20240501;

  double alpha0 = -3.0;
  std::array<double, 4> alpha_x{0.6, 1.0, 0.6, 0.4};
  double alpha_w = 0.5;
  double alpha_y = 0.5;

  double gamma0 = -1.5;
  std::array<double, 4> gamma_x{0.5, 0.8, 0.4, 0.6};
  double gamma_w = 1.0;
  double gamma_y = 0.3;
  std::array<double, 4> gamma_int{1.0, 0.0, 0.0, 0.0};

  ModeratorChoice moderator = ModeratorChoice::kSpatial;
  double decay = 2.0;
  int lookback = 4;

  void validate() const;
  Window window() const { return Window(0.0, extent, 0.0, extent); }
  GridShape raster_shape() const { return GridShape(window(), raster_n, raster_n); }
  PixelGrid pixel_grid() const { return PixelGrid(window(), pixel_n, pixel_n); }
  /// True propensity coefficients in the order of `propensity_covariate_names()`.
  Eigen::VectorXd true_propensity_gamma() const;
};

std::vector<std::string> propensity_covariate_names();

nlohmann::json to_json(const DgpConfig& config);
DgpConfig dgp_from_json(const nlohmann::json& j);
std::string to_string(ModeratorChoice choice);
ModeratorChoice moderator_choice_from_string(const std::string& s);

/// Fixed spatial surfaces shared by every panel of a configuration.
struct SpatialSurfaces {
  Raster x1;     // exp(-D(w; roads))
  Raster x2;     // exp(-0.4 |w - capital|)
  Raster g3;     // normalized density behind X3 (airstrike-like)
  Raster g4;     // normalized density behind X4 (violence-like)
  Raster z3_intensity;  // exp(rho0 + rho1 g3)
  Raster z4_intensity;
};

SpatialSurfaces make_spatial_surfaces(const DgpConfig& config);
/// X2 evaluated at an arbitrary location.
double x2_at(const DgpConfig& config, Location loc);

struct SimPanel {
  DgpConfig config;
  GridShape raster;
  PixelGrid pixels;
  std::shared_ptr<const SpatialSurfaces> surfaces;
  std::vector<PointPattern> treatments;  // t = 1..T at index t-1
  std::vector<PointPattern> outcomes;
  std::shared_ptr<const CovariateStack> covariates;
  ModeratorPanel moderator;
  /// Per-cell moderator used by the interaction term (spatial kinds).
  Raster interaction_surface;
  std::vector<Raster> x3;          // index t-1
  std::vector<Raster> w_distance;  // D(w; W_t), index t-1
  std::vector<Raster> y_distance;  // D(w; Y_t), index t-1
  std::vector<int> cell_pixel;     // pixel of each raster cell (by center)

  int T() const { return config.T; }
  IntensitySurface true_treatment_intensity(int t) const;
  /// gamma0 + gX'X_t per cell.
  std::vector<double> outcome_static_part(int t) const;
};

/// Evaluates log lambda^Y_t. `w_distance[j]` is the treatment distance raster
/// for period t - j (j = 0..3; nullptr for an empty or pre-sample period) and
/// `y_prev_distance` the outcome distance raster of period t-1 (or nullptr).
void outcome_log_intensity(const SimPanel& panel, int t, std::span<const double> static_part,
                           const std::array<const Raster*, 4>& w_distance, const Raster* y_prev_distance,
                           std::vector<double>& out);

SimPanel generate_panel(const DgpConfig& config, const SeedStream& stream);
SimPanel generate_panel(const DgpConfig& config, std::shared_ptr<const SpatialSurfaces> surfaces,
                        const SeedStream& stream);

/// Smoothed-pattern helper: exp(-decay * D), 0 where D is infinite.
double smoother(double distance, double decay);

struct CalibrationResult {
  DgpConfig config;
  double mean_treatments = 0.0;
  double mean_outcomes = 0.0;
};

/// Shifts alpha0 and gamma0 so the expected treatment and outcome counts per
/// period match the targets, using pilot panels.
CalibrationResult calibrate_intercepts(DgpConfig config, double target_treatments, double target_outcomes,
                                       const SeedStream& stream, int rounds = 6);

}  // namespace stcate::sim

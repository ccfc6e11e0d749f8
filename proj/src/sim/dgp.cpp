#include "stcate/sim/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stcate/error.hpp"

namespace stcate::sim {

namespace {

constexpr double kCapitalX = 0.6;  // fraction of the extent
constexpr double kCapitalY = 0.4;
constexpr double kCapitalDecay = 0.4;
constexpr double kConfounderDecay = 1.0;
constexpr double kBaseBandwidth = 0.4;
constexpr int kBaseSamples = 600;

struct Component {
  double x, y, sd, weight;  // x, y, sd as fractions of the extent
};

// Airstrike-like and violence-like base densities.
const std::vector<Component> kG3 = {{0.6, 0.4, 0.06, 0.5}, {0.25, 0.7, 0.08, 0.3}, {0.8, 0.8, 0.1, 0.2}};
const std::vector<Component> kG4 = {{0.6, 0.45, 0.09, 0.4}, {0.3, 0.3, 0.07, 0.3}, {0.75, 0.15, 0.08, 0.3}};

Raster mixture_kde(const DgpConfig& config, const std::vector<Component>& mix, std::uint64_t label) {
  Engine rng = SeedStream{config.base_density_seed, label}.engine();
  std::vector<double> weights;
  for (const Component& c : mix) weights.push_back(c.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const Window window = config.window();
  std::vector<Location> points;
  while (static_cast<int>(points.size()) < kBaseSamples) {
    const Component& c = mix[static_cast<std::size_t>(pick(rng))];
    const Location loc{config.extent * (c.x + c.sd * normal(rng)), config.extent * (c.y + c.sd * normal(rng))};
    if (window.contains(loc)) points.push_back(loc);
  }
  const double h = kBaseBandwidth * config.extent / 10.0;
  return estimate_density_kde(points, config.raster_shape(), KdeBandwidth{h, h}).raster();
}

std::vector<Location> road_points(const DgpConfig& config) {
  const double e = config.extent;
  const std::array<std::array<double, 4>, 2> roads{{{0.0, 0.2, 1.0, 0.8}, {0.3, 0.0, 0.4, 1.0}}};
  std::vector<Location> out;
  const int steps = 400;
  for (const auto& r : roads) {
    for (int k = 0; k <= steps; ++k) {
      const double s = static_cast<double>(k) / steps;
      out.push_back({e * (r[0] + s * (r[2] - r[0])), e * (r[1] + s * (r[3] - r[1]))});
    }
  }
  return out;
}

Raster smoothed(const Raster& distance, double decay) {
  Raster out(distance.shape());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = smoother(distance[c], decay);
  return out;
}

Raster exp_linear(const Raster& g, double b0, double b1) {
  Raster out(g.shape());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = std::exp(b0 + b1 * g[c]);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void DgpConfig::validate() const {
  if (T < 2) throw InvalidArgument("DGP needs at least two periods");
  if (!(extent > 0.0)) throw InvalidArgument("window extent must be positive");
  if (raster_n < 1 || pixel_n < 1 || raster_n % pixel_n != 0) {
    throw InvalidArgument("raster resolution must be a positive multiple of the pixel resolution");
  }
  if (lookback < 1 || lookback > 4) throw InvalidArgument("lookback must lie in 1..4");
  if (!(decay > 0.0)) throw InvalidArgument("smoother decay must be positive");
}

Eigen::VectorXd DgpConfig::true_propensity_gamma() const {
  Eigen::VectorXd g(7);
  g << alpha0, alpha_x[0], alpha_x[1], alpha_x[2], alpha_x[3], alpha_w, alpha_y;
  return g;
}

std::vector<std::string> propensity_covariate_names() {
  return {"intercept", "x1", "x2", "x3", "x4", "w_prev", "y_prev"};
}

std::string to_string(ModeratorChoice choice) {
  switch (choice) {
    case ModeratorChoice::kSpatial: return "spatial";
    case ModeratorChoice::kSpatioTemporal: return "spatio_temporal";
    case ModeratorChoice::kBinary: return "binary";
    case ModeratorChoice::kCheckerboard: return "checkerboard";
  }
  return "spatial";
}

ModeratorChoice moderator_choice_from_string(const std::string& s) {
  if (s == "spatial") return ModeratorChoice::kSpatial;
  if (s == "spatio_temporal") return ModeratorChoice::kSpatioTemporal;
  if (s == "binary") return ModeratorChoice::kBinary;
  if (s == "checkerboard") return ModeratorChoice::kCheckerboard;
  throw InvalidArgument("unknown moderator kind: " + s);
}

nlohmann::json to_json(const DgpConfig& c) {
  return {{"name", c.name},
          {"T", c.T},
          {"extent", c.extent},
          {"raster_n", c.raster_n},
          {"pixel_n", c.pixel_n},
          {"rho0_x3", c.rho0_x3},
          {"rho1_x3", c.rho1_x3},
          {"rho0_x4", c.rho0_x4},
          {"rho1_x4", c.rho1_x4},
          {"base_density_seed", c.base_density_seed},
          {"alpha0", c.alpha0},
          {"alpha_x", c.alpha_x},
          {"alpha_w", c.alpha_w},
          {"alpha_y", c.alpha_y},
          {"gamma0", c.gamma0},
          {"gamma_x", c.gamma_x},
          {"gamma_w", c.gamma_w},
          {"gamma_y", c.gamma_y},
          {"gamma_int", c.gamma_int},
          {"moderator", to_string(c.moderator)},
          {"decay", c.decay},
          {"lookback", c.lookback}};
}

DgpConfig dgp_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("DGP configuration must be a JSON object");
  DgpConfig c;
  try {
    c.name = j.value("name", c.name);
    c.T = j.value("T", c.T);
    c.extent = j.value("extent", c.extent);
    c.raster_n = j.value("raster_n", c.raster_n);
    c.pixel_n = j.value("pixel_n", c.pixel_n);
    c.rho0_x3 = j.value("rho0_x3", c.rho0_x3);
    c.rho1_x3 = j.value("rho1_x3", c.rho1_x3);
    c.rho0_x4 = j.value("rho0_x4", c.rho0_x4);
    c.rho1_x4 = j.value("rho1_x4", c.rho1_x4);
    c.base_density_seed = j.value("base_density_seed", c.base_density_seed);
    c.alpha0 = j.value("alpha0", c.alpha0);
    c.alpha_x = j.value("alpha_x", c.alpha_x);
    c.alpha_w = j.value("alpha_w", c.alpha_w);
    c.alpha_y = j.value("alpha_y", c.alpha_y);
    c.gamma0 = j.value("gamma0", c.gamma0);
    c.gamma_x = j.value("gamma_x", c.gamma_x);
    c.gamma_w = j.value("gamma_w", c.gamma_w);
    c.gamma_y = j.value("gamma_y", c.gamma_y);
    c.gamma_int = j.value("gamma_int", c.gamma_int);
    if (j.contains("moderator")) c.moderator = moderator_choice_from_string(j.at("moderator").get<std::string>());
    c.decay = j.value("decay", c.decay);
    c.lookback = j.value("lookback", c.lookback);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad DGP configuration: ") + e.what());
  }
  c.validate();
  return c;
}

double smoother(double distance, double decay) {
  return std::isfinite(distance) ? std::exp(-decay * distance) : 0.0;
}

double x2_at(const DgpConfig& config, Location loc) {
  const double dx = loc.x - kCapitalX * config.extent;
  const double dy = loc.y - kCapitalY * config.extent;
  return std::exp(-kCapitalDecay * std::hypot(dx, dy) * 10.0 / config.extent);
}

SpatialSurfaces make_spatial_surfaces(const DgpConfig& config) {
  config.validate();
  const GridShape shape = config.raster_shape();
  Raster x1 = smoothed(distance_raster(road_points(config), shape), 1.0);
  Raster x2(shape);
  for (std::size_t c = 0; c < x2.size(); ++c) x2[c] = x2_at(config, shape.cell_center(c));
  Raster g3 = mixture_kde(config, kG3, 3);
  Raster g4 = mixture_kde(config, kG4, 4);
  Raster z3 = exp_linear(g3, config.rho0_x3, config.rho1_x3);
  Raster z4 = exp_linear(g4, config.rho0_x4, config.rho1_x4);
  return {std::move(x1), std::move(x2), std::move(g3), std::move(g4), std::move(z3), std::move(z4)};
}

IntensitySurface SimPanel::true_treatment_intensity(int t) const {
  return PropensityModel(covariates, config.true_propensity_gamma()).intensity(t);
}

std::vector<double> SimPanel::outcome_static_part(int t) const {
  const auto& g = config.gamma_x;
  const auto design = covariates->design(t);
  std::vector<double> out(raster.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    out[c] = config.gamma0 + g[0] * design(i, 1) + g[1] * design(i, 2) + g[2] * design(i, 3) +
             g[3] * design(i, 4);
  }
  return out;
}

void outcome_log_intensity(const SimPanel& panel, int t, std::span<const double> static_part,
                           const std::array<const Raster*, 4>& w_distance, const Raster* y_prev_distance,
                           std::vector<double>& out) {
  using Arr = Eigen::ArrayXd;
  using CMap = Eigen::Map<const Arr>;
  const DgpConfig& cfg = panel.config;
  const auto n = static_cast<Eigen::Index>(panel.raster.size());
  if (static_cast<Eigen::Index>(static_part.size()) != n) throw InvalidArgument("static part has the wrong size");
  auto map = [n](const Raster& r) { return CMap(r.values().data(), n); };
  // exp(-decay * D) with empty patterns (D = inf) mapped to 0.
  auto smooth = [&cfg](const Arr& d) -> Arr { return d.isFinite().select((-cfg.decay * d).exp(), 0.0); };

  out.resize(static_cast<std::size_t>(n));
  Eigen::Map<Arr> v(out.data(), n);
  v = CMap(static_part.data(), n);
  Arr d_min = Arr::Constant(n, std::numeric_limits<double>::infinity());
  for (int j = 0; j < cfg.lookback; ++j) {
    if (w_distance[j] != nullptr) d_min = d_min.min(map(*w_distance[j]));
  }
  const Arr w_star = smooth(d_min);
  v += cfg.gamma_w * w_star;
  if (y_prev_distance != nullptr && cfg.gamma_y != 0.0) v += cfg.gamma_y * smooth(map(*y_prev_distance));
  if (cfg.moderator == ModeratorChoice::kSpatioTemporal) {
    for (int j = 1; j <= 4; ++j) {
      if (cfg.gamma_int[j - 1] == 0.0 || t - j < 1 || w_distance[j - 1] == nullptr) continue;
      v += cfg.gamma_int[j - 1] * map(panel.x3[t - j - 1]) * smooth(map(*w_distance[j - 1]));
    }
  } else if (cfg.gamma_int[0] != 0.0) {
    v += cfg.gamma_int[0] * map(panel.interaction_surface) * w_star;
  }
}

SimPanel generate_panel(const DgpConfig& config, const SeedStream& stream) {
  return generate_panel(config, std::make_shared<const SpatialSurfaces>(make_spatial_surfaces(config)), stream);
}

SimPanel generate_panel(const DgpConfig& config, std::shared_ptr<const SpatialSurfaces> surfaces,
                        const SeedStream& stream) {
  config.validate();
  if (!surfaces) throw InvalidArgument("missing spatial surfaces");
  const GridShape shape = config.raster_shape();
  const PixelGrid pixels = config.pixel_grid();
  const std::size_t n_cells = shape.size();
  const std::size_t n_pix = pixels.pixel_count();

  std::vector<int> cell_pixel(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) cell_pixel[c] = static_cast<int>(pixels.pixel_of(shape.cell_center(c)));

  // Time-invariant moderators and the matching per-cell interaction surface.
  Eigen::MatrixXd mod_values(static_cast<Eigen::Index>(n_pix), 1);
  ModeratorKind mod_kind = ModeratorKind::kContinuous;
  Raster interaction(shape, 0.0);
  switch (config.moderator) {
    case ModeratorChoice::kSpatial:
      for (std::size_t i = 0; i < n_pix; ++i) mod_values(static_cast<Eigen::Index>(i), 0) = x2_at(config, pixels.centroid(i));
      interaction = surfaces->x2;
      break;
    case ModeratorChoice::kBinary: {
      std::vector<double> v(n_pix);
      for (std::size_t i = 0; i < n_pix; ++i) v[i] = x2_at(config, pixels.centroid(i));
      const double med = median(v);
      for (std::size_t i = 0; i < n_pix; ++i) mod_values(static_cast<Eigen::Index>(i), 0) = v[i] >= med ? 1.0 : 0.0;
      mod_kind = ModeratorKind::kBinary;
      break;
    }
    case ModeratorChoice::kCheckerboard:
      for (std::size_t i = 0; i < n_pix; ++i) {
        mod_values(static_cast<Eigen::Index>(i), 0) =
            (pixels.shape().column_of(i) + pixels.shape().row_of(i)) % 2 == 0 ? 1.0 : 0.0;
      }
      mod_kind = ModeratorKind::kBinary;
      break;
    case ModeratorChoice::kSpatioTemporal:
      mod_values.resize(static_cast<Eigen::Index>(n_pix), config.T);
      break;
  }
  if (config.moderator == ModeratorChoice::kBinary || config.moderator == ModeratorChoice::kCheckerboard) {
    for (std::size_t c = 0; c < n_cells; ++c) interaction[c] = mod_values(cell_pixel[c], 0);
  }

  SimPanel panel{config,
                 shape,
                 pixels,
                 surfaces,
                 {},
                 {},
                 nullptr,
                 ModeratorPanel(pixels, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_pix), 1), mod_kind),
                 interaction,
                 {},
                 {},
                 {},
                 cell_pixel};

  auto stack = std::make_shared<CovariateStack>(shape, propensity_covariate_names());
  const PoissonSampler z3_sampler{IntensitySurface(surfaces->z3_intensity)};
  const PoissonSampler z4_sampler{IntensitySurface(surfaces->z4_intensity)};
  const Eigen::VectorXd alpha = config.true_propensity_gamma();
  const Raster empty(shape, std::numeric_limits<double>::infinity());
  Eigen::MatrixXd block(static_cast<Eigen::Index>(n_cells), 7);
  std::vector<double> log_lambda;

  for (int t = 1; t <= config.T; ++t) {
    Engine rng = stream.child(static_cast<std::uint64_t>(t)).engine();
    const PointPattern z3 = z3_sampler.sample(t, rng);
    const PointPattern z4 = z4_sampler.sample(t, rng);
    const Raster x3 = smoothed(distance_raster(z3.points, shape), kConfounderDecay);
    const Raster x4 = smoothed(distance_raster(z4.points, shape), kConfounderDecay);
    const Raster& w_prev = t > 1 ? panel.w_distance[t - 2] : empty;
    const Raster& y_prev = t > 1 ? panel.y_distance[t - 2] : empty;
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      block(i, 0) = 1.0;
      block(i, 1) = surfaces->x1[c];
      block(i, 2) = surfaces->x2[c];
      block(i, 3) = x3[c];
      block(i, 4) = x4[c];
      block(i, 5) = smoother(w_prev[c], config.decay);
      block(i, 6) = smoother(y_prev[c], config.decay);
    }
    stack->add_period(block);
    if (config.moderator == ModeratorChoice::kSpatioTemporal) {
      for (std::size_t i = 0; i < n_pix; ++i) {
        mod_values(static_cast<Eigen::Index>(i), t - 1) =
            smoother(distance_to_nearest(pixels.centroid(i), z3.points), kConfounderDecay);
      }
    }
    panel.x3.push_back(x3);

    // Treatment events.
    Raster w_intensity(shape);
    const Eigen::VectorXd eta = block * alpha;
    for (std::size_t c = 0; c < n_cells; ++c) {
      w_intensity[c] = std::exp(std::clamp(eta[static_cast<Eigen::Index>(c)], -kExponentClamp, kExponentClamp));
    }
    PointPattern w = PoissonSampler(IntensitySurface(std::move(w_intensity))).sample(t, rng);
    panel.w_distance.push_back(distance_raster(w.points, shape));
    panel.treatments.push_back(std::move(w));

    // Outcome events.
    std::vector<double> static_part(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto i = static_cast<Eigen::Index>(c);
      static_part[c] = config.gamma0 + config.gamma_x[0] * block(i, 1) + config.gamma_x[1] * block(i, 2) +
                       config.gamma_x[2] * block(i, 3) + config.gamma_x[3] * block(i, 4);
    }
    std::array<const Raster*, 4> w_dist{};
    for (int j = 0; j < 4; ++j) w_dist[j] = t - j >= 1 ? &panel.w_distance[t - j - 1] : nullptr;
    outcome_log_intensity(panel, t, static_part, w_dist, t > 1 ? &panel.y_distance[t - 2] : nullptr, log_lambda);
    Raster y_intensity(shape);
    for (std::size_t c = 0; c < n_cells; ++c) y_intensity[c] = std::exp(std::min(log_lambda[c], kExponentClamp));
    PointPattern y = PoissonSampler(IntensitySurface(std::move(y_intensity))).sample(t, rng);
    panel.y_distance.push_back(distance_raster(y.points, shape));
    panel.outcomes.push_back(std::move(y));
  }
  panel.covariates = std::move(stack);
  panel.moderator = ModeratorPanel(pixels, std::move(mod_values), mod_kind);
  return panel;
}

CalibrationResult calibrate_intercepts(DgpConfig config, double target_treatments, double target_outcomes,
                                       const SeedStream& stream, int rounds) {
  if (!(target_treatments > 0.0) || !(target_outcomes > 0.0)) {
    throw InvalidArgument("calibration targets must be positive");
  }
  auto surfaces = std::make_shared<const SpatialSurfaces>(make_spatial_surfaces(config));
  CalibrationResult result;
  for (int round = 0; round <= rounds; ++round) {
    const SimPanel panel = generate_panel(config, surfaces, stream);
    double w_total = 0.0;
    double y_total = 0.0;
    std::vector<double> log_lambda;
    const double cell_area = panel.raster.cell_area();
    for (int t = 1; t <= config.T; ++t) {
      w_total += panel.true_treatment_intensity(t).total();
      std::array<const Raster*, 4> w_dist{};
      for (int j = 0; j < 4; ++j) w_dist[j] = t - j >= 1 ? &panel.w_distance[t - j - 1] : nullptr;
      outcome_log_intensity(panel, t, panel.outcome_static_part(t), w_dist,
                            t > 1 ? &panel.y_distance[t - 2] : nullptr, log_lambda);
      for (double v : log_lambda) y_total += std::exp(v) * cell_area;
    }
    result.mean_treatments = w_total / config.T;
    result.mean_outcomes = y_total / config.T;
    result.config = config;
    if (round == rounds) break;
    config.alpha0 += std::log(target_treatments / result.mean_treatments);
    config.gamma0 += std::log(target_outcomes / result.mean_outcomes);
  }
  return result;
}

}  // namespace stcate::sim

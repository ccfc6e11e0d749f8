#include "stcate/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stcate/basis.hpp"
#include "stcate/cate.hpp"
#include "stcate/error.hpp"
#include "stcate/inference.hpp"
#include "stcate/io.hpp"
#include "stcate/sim/experiment.hpp"
#include "stcate/sim/oracle.hpp"
#include "stcate/weights.hpp"

namespace stcate::cli {

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_relative() ? base / path : path;
}

fs::path base_dir_of(const CommandOptions& options) {
  return options.config.has_parent_path() ? options.config.parent_path() : fs::path(".");
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <typename T>
T get(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidArgument(std::string("config is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("config field '") + key + "': " + e.what());
  }
}

void check_in_window(const std::vector<PointPattern>& patterns, const Window& window, const std::string& what) {
  for (const PointPattern& p : patterns) {
    for (const Location& loc : p.points) {
      if (!window.contains(loc)) {
        throw InvalidArgument(what + " event at period " + std::to_string(p.t) + " (" + fmt(loc.x) + ", " +
                              fmt(loc.y) + ") lies outside the covariate window");
      }
    }
  }
}

std::string replace_t(std::string pattern, int t) {
  const auto pos = pattern.find("{t}");
  if (pos == std::string::npos) throw InvalidArgument("raster_pattern must contain {t}: " + pattern);
  return pattern.replace(pos, 3, std::to_string(t));
}

Eigen::VectorXd model_gamma(const Json& config, const fs::path& base, const CovariateStack& stack) {
  const Json model = io::read_json(resolve(base, get<std::string>(config.at("propensity"), "model")));
  const auto names = get<std::vector<std::string>>(model, "covariates");
  if (names != stack.names()) throw InvalidArgument("stored propensity model covariates differ from the config");
  const Eigen::VectorXd gamma = io::vector_from_json(model.at("gamma"));
  if (gamma.size() != stack.covariate_count()) throw InvalidArgument("stored propensity model has the wrong size");
  return gamma;
}

FitReport fit_or_throw(const AnalysisData& data, const FitOptions& options) {
  FitReport fit = fit_propensity(data.covariates, data.treatments, options);
  if (!fit.converged) {
    throw NumericalFailure("propensity fit did not converge (score norm " + fmt(fit.gradient_norm) + " after " +
                           std::to_string(fit.iterations) + " iterations)");
  }
  return fit;
}

std::string csv_value(double v) { return std::isfinite(v) ? fmt(v) : "NA"; }

}  // namespace

AnalysisData load_analysis_data(const Json& config, const fs::path& base) {
  AnalysisData data;
  auto treatments = io::read_points_csv(resolve(base, get<std::string>(config, "treatments")));
  auto outcomes = io::read_points_csv(resolve(base, get<std::string>(config, "outcomes")));
  int T = std::max(treatments.size(), outcomes.size());
  if (config.contains("T")) {
    const int declared = get<int>(config, "T");
    if (declared < T) throw InvalidArgument("events occur after the declared T");
    T = declared;
  }
  if (T < 1) throw InvalidArgument("no periods in the event files");
  data.T = T;
  data.treatments = io::read_points_csv(resolve(base, get<std::string>(config, "treatments")), T);
  data.outcomes = io::read_points_csv(resolve(base, get<std::string>(config, "outcomes")), T);

  const Json covs = get<Json>(config, "covariates");
  if (!covs.is_array() || covs.empty()) throw InvalidArgument("covariates must be a non-empty array");
  std::vector<std::string> names;
  std::optional<GridShape> shape;
  std::vector<std::optional<Raster>> fixed(covs.size());
  for (std::size_t k = 0; k < covs.size(); ++k) {
    names.push_back(get<std::string>(covs[k], "name"));
    if (covs[k].contains("raster")) {
      fixed[k] = io::read_raster_csv(resolve(base, get<std::string>(covs[k], "raster")));
      if (!shape) shape = fixed[k]->shape();
    } else if (covs[k].contains("raster_pattern") && !shape) {
      shape = io::read_raster_csv(resolve(base, replace_t(get<std::string>(covs[k], "raster_pattern"), 1))).shape();
    }
  }
  if (!shape) throw InvalidArgument("at least one covariate must come from a raster file");
  check_in_window(data.treatments, shape->window(), "treatment");
  check_in_window(data.outcomes, shape->window(), "outcome");

  auto stack = std::make_shared<CovariateStack>(*shape, names);
  std::vector<Raster> lag_sources[2];
  for (const auto& p : data.treatments) lag_sources[0].push_back(distance_raster(p.points, *shape));
  for (const auto& p : data.outcomes) lag_sources[1].push_back(distance_raster(p.points, *shape));
  for (int t = 1; t <= T; ++t) {
    std::vector<Raster> period;
    for (std::size_t k = 0; k < covs.size(); ++k) {
      const Json& c = covs[k];
      if (fixed[k]) {
        period.push_back(*fixed[k]);
      } else if (c.contains("raster_pattern")) {
        period.push_back(io::read_raster_csv(resolve(base, replace_t(get<std::string>(c, "raster_pattern"), t))));
      } else if (c.contains("smoothed")) {
        const std::string src = get<std::string>(c, "smoothed");
        if (src != "treatments" && src != "outcomes") throw InvalidArgument("smoothed must name treatments or outcomes");
        const int lag = c.value("lag", 1);
        const double decay = c.value("decay", 2.0);
        if (lag < 1) throw InvalidArgument("smoothed covariate lag must be >= 1");
        Raster r(*shape, 0.0);
        if (t - lag >= 1) {
          const Raster& d = lag_sources[src == "treatments" ? 0 : 1][t - lag - 1];
          for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::isfinite(d[i]) ? std::exp(-decay * d[i]) : 0.0;
        }
        period.push_back(std::move(r));
      } else if (names[k] == "intercept") {
        period.emplace_back(*shape, 1.0);
      } else {
        throw InvalidArgument("covariate '" + names[k] + "' has no source");
      }
    }
    stack->add_period(period);
  }
  data.covariates = std::move(stack);
  if (config.contains("pixels")) {
    const Json& p = config.at("pixels");
    data.pixels.emplace(shape->window(), get<int>(p, "nx"), get<int>(p, "ny"));
  }
  return data;
}

void cmd_fit_propensity(const CommandOptions& options) {
  const Json config = io::read_json(options.config);
  const fs::path base = base_dir_of(options);
  const AnalysisData data = load_analysis_data(config, base);
  const FitReport fit = fit_or_throw(data, {});
  const double frac = config.value("train_fraction", 0.8);
  if (!(frac > 0.0 && frac <= 1.0)) throw InvalidArgument("train_fraction must lie in (0, 1]");
  const int t_train = std::max(1, static_cast<int>(std::floor(frac * data.T)));
  FitOptions train_opts;
  train_opts.t_end = t_train;
  const FitReport train = fit_or_throw(data, train_opts);

  const PropensityModel full_model(data.covariates, fit.gamma_hat);
  const PropensityModel train_model(data.covariates, train.gamma_hat);
  const Window& w = data.covariates->shape().window();
  const Rect all{w.x_min(), w.x_max(), w.y_min(), w.y_max()};
  const auto pred_full = predict_counts(full_model, 1, data.T, all);
  const auto pred_train = predict_counts(train_model, 1, data.T, all);
  std::ostringstream csv;
  csv << "t,observed,predicted_full,predicted_train,in_train\n";
  for (int t = 1; t <= data.T; ++t) {
    csv << t << ',' << data.treatments[t - 1].size() << ',' << fmt(pred_full[t - 1]) << ',' << fmt(pred_train[t - 1])
        << ',' << (t <= t_train ? 1 : 0) << '\n';
  }
  const auto& names = data.covariates->names();
  Json model = io::to_json(fit, names);
  model["grid"] = io::to_json(data.covariates->shape());
  model["T"] = data.T;
  model["train"] = io::to_json(train, names);
  model["train_fraction"] = frac;
  io::write_json(options.out / "propensity_model.json", model);
  io::atomic_write(options.out / "propensity_predictions.csv", csv.str());
}

void cmd_estimate(const CommandOptions& options) {
  const Json config = io::read_json(options.config);
  const fs::path base = base_dir_of(options);
  const AnalysisData data = load_analysis_data(config, base);
  if (!data.pixels) throw InvalidArgument("config is missing 'pixels'");
  const PixelGrid& pixels = *data.pixels;
  const GridShape& shape = data.covariates->shape();

  Json summary;
  summary["config"] = config;
  Eigen::VectorXd gamma;
  if (config.contains("propensity") && config.at("propensity").contains("model")) {
    gamma = model_gamma(config, base, *data.covariates);
    summary["propensity"] = {{"source", "stored"}, {"gamma", io::to_json(gamma)}};
  } else {
    const FitReport fit = fit_or_throw(data, {});
    gamma = fit.gamma_hat;
    summary["propensity"] = io::to_json(fit, data.covariates->names());
    summary["propensity"]["source"] = "fitted";
  }
  const PropensityModel model(data.covariates, gamma);

  const Json iv = get<Json>(config, "intervention");
  std::optional<IntensitySurface> phi;
  const Json phi_spec = iv.value("phi", Json("kde"));
  if (phi_spec.is_string() && phi_spec.get<std::string>() == "kde") {
    std::vector<Location> all;
    for (const auto& p : data.treatments) all.insert(all.end(), p.points.begin(), p.points.end());
    KdeBandwidth bw;
    phi.emplace(estimate_density_kde(all, shape, &bw));
    summary["phi"] = {{"source", "kde"}, {"bandwidth", {bw.hx, bw.hy}}};
  } else if (phi_spec.is_object() && phi_spec.contains("raster")) {
    Raster r = io::read_raster_csv(resolve(base, get<std::string>(phi_spec, "raster")));
    if (!(r.shape() == shape)) throw InvalidArgument("phi raster is on a different grid than the covariates");
    phi.emplace(std::move(r));
    summary["phi"] = {{"source", "raster"}};
  } else {
    throw InvalidArgument("intervention.phi must be \"kde\" or {\"raster\": path}");
  }
  const auto c = get<std::vector<double>>(iv, "c");
  if (c.size() != 2) throw InvalidArgument("intervention.c must hold two scales");
  const auto Ms = get<std::vector<int>>(iv, "M");
  if (Ms.empty()) throw InvalidArgument("intervention.M is empty");

  const WeightingMode mode = io::weighting_mode_from_string(config.value("weighting", std::string("hajek")));
  const double q = config.value("truncation_q", 1.0);
  const QMode q_mode = io::q_mode_from_string(config.value("q_mode", std::string("stabilized")));
  const double level = config.value("level", 0.95);
  const std::vector<double> r_grid = config.value("r_grid", std::vector<double>{0.0, 1.0});
  CateOptions cate_opts;
  cate_opts.district_scale = config.value("district_scale", 1.0);
  const std::string rank = config.value("rank_policy", std::string("error"));
  if (rank == "minimum_norm") {
    cate_opts.rank_policy = RankPolicy::kMinimumNorm;
  } else if (rank != "error") {
    throw InvalidArgument("rank_policy must be error or minimum_norm");
  }
  summary["settings"] = {{"weighting", io::to_string(mode)},
                         {"truncation_q", q},
                         {"q_mode", io::to_string(q_mode)},
                         {"level", level},
                         {"r_grid", r_grid},
                         {"district_scale", cate_opts.district_scale},
                         {"rank_policy", rank},
                         {"c", c},
                         {"M", Ms},
                         {"master_seed", options.seed.value_or(config.value("master_seed", std::uint64_t{1}))}};

  struct ModeratorEntry {
    std::string name;
    ModeratorPanel panel;
    BasisSpec basis;
  };
  std::vector<ModeratorEntry> moderators;
  for (const Json& m : get<Json>(config, "moderators")) {
    const std::string kind = m.value("kind", std::string("continuous"));
    if (kind != "binary" && kind != "continuous") throw InvalidArgument("moderator kind must be binary or continuous");
    const ModeratorKind mk = kind == "binary" ? ModeratorKind::kBinary : ModeratorKind::kContinuous;
    ModeratorPanel panel = io::read_moderator_csv(resolve(base, get<std::string>(m, "file")), pixels, mk);
    BasisSpec basis = m.contains("basis") ? io::basis_from_json(m.at("basis")) : BasisSpec::binary();
    moderators.push_back({get<std::string>(m, "name"), std::move(panel), std::move(basis)});
  }
  if (moderators.empty()) throw InvalidArgument("no moderators configured");

  const Eigen::MatrixXd counts = outcome_count_matrix(data.outcomes, pixels);
  std::vector<IntensitySurface> denominators;
  for (int t = 1; t <= data.T; ++t) denominators.push_back(model.intensity(t));
  const DenominatorFn denominator = [&denominators](int t) { return denominators[t - 1]; };

  Json results = Json::array();
  for (int M : Ms) {
    const InterventionSpec hp(*phi, c[0], M, "h_prime");
    const InterventionSpec hpp(*phi, c[1], M, "h_double_prime");
    WeightSeries w1 = compute_log_weights(hp, denominator, data.treatments);
    WeightSeries w2 = compute_log_weights(hpp, denominator, data.treatments);
    if (q < 1.0) {
      w1 = truncate_weights(w1, q);
      w2 = truncate_weights(w2, q);
    }
    if (mode == WeightingMode::kHajek) {
      w1 = stabilize_hajek(w1);
      w2 = stabilize_hajek(w2);
    }
    const std::string suffix = "M" + std::to_string(M);
    io::atomic_write(options.out / ("weights_h_prime_" + suffix + ".csv"), io::weights_to_csv(w1));
    io::atomic_write(options.out / ("weights_h_double_prime_" + suffix + ".csv"), io::weights_to_csv(w2));
    const PseudoOutcomePanel p1 = build_pseudo_outcomes(w1, counts, pixels, hp.id());
    const PseudoOutcomePanel p2 = build_pseudo_outcomes(w2, counts, pixels, hpp.id());

    for (const ModeratorEntry& mod : moderators) {
      const CateFit fit = fit_cate(mod.panel, p1, p2, M, mod.basis, cate_opts);
      const VarianceBound bound =
          mode == WeightingMode::kHajek ? estimate_variance_bound(fit, w1, w2, q_mode) : ipw_variance_bound(fit);
      std::ostringstream csv;
      csv << "label,r,estimate,lo,hi,se,extrapolation\n";
      const bool binary = mod.basis.kind() == BasisKind::kBinary;
      const std::vector<double> grid = binary ? std::vector<double>{0.0, 1.0} : r_grid;
      for (double r : grid) {
        const Interval ci = cate_confidence_interval(fit, bound, r, level);
        csv << "tau(" << fmt(r) << ")," << fmt(r) << ',' << fmt(evaluate_cate(fit, r)) << ',' << fmt(ci.lo) << ','
            << fmt(ci.hi) << ',' << fmt(cate_standard_error(fit, bound, r)) << ','
            << (is_extrapolation(fit, r) ? 1 : 0) << '\n';
      }
      if (binary) {
        // tau(1) - tau(0) is the slope coefficient.
        const double scale = std::abs(fit.district_scale);
        const double diff = fit.district_scale * fit.beta_bar[fit.basis.first_slope()];
        const int j = fit.basis.first_slope();
        const double se = scale * std::sqrt(std::max(0.0, bound.Sigma_hat(j, j) / bound.n_eff));
        const double z = normal_quantile(0.5 + 0.5 * level);
        csv << "difference,NA," << fmt(diff) << ',' << fmt(diff - z * se) << ',' << fmt(diff + z * se) << ','
            << fmt(se) << ",0\n";
      }
      io::atomic_write(options.out / ("cate_" + mod.name + "_" + suffix + ".csv"), csv.str());
      Json entry;
      entry["moderator"] = mod.name;
      entry["M"] = M;
      entry["fit"] = io::to_json(fit);
      entry["bound"] = io::to_json(bound);
      HeterogeneityTest test;
      std::string test_note;
      try {
        test = test_no_heterogeneity(fit, bound);
      } catch (const NumericalFailure& e) {
        test.p_value = std::numeric_limits<double>::quiet_NaN();
        test_note = e.what();
      }
      entry["heterogeneity_test"] = io::to_json(test);
      if (!test_note.empty()) entry["heterogeneity_test"]["note"] = test_note;
      entry["weights"] = {{"h_prime", w1.flags()}, {"h_double_prime", w2.flags()},
                          {"mean_rho_h_prime", w1.mean_rho}, {"mean_rho_h_double_prime", w2.mean_rho}};
      results.push_back(entry);
    }
  }
  summary["results"] = results;
  io::write_json(options.out / "estimate_summary.json", summary);
}

void cmd_simulate(const CommandOptions& options) {
  const Json config = io::read_json(options.config);
  sim::ExperimentConfig exp = sim::experiment_from_json(config, base_dir_of(options));
  if (options.seed) exp.master_seed = *options.seed;
  if (options.threads) exp.threads = *options.threads;
  if (options.paper_scale) sim::apply_paper_scale(exp);
  if (exp.threads < 1) throw InvalidArgument("threads must be >= 1");
  const sim::ExperimentReport report = sim::run_experiment(exp);
  sim::write_report(report, options.out);
}

void cmd_oracle(const CommandOptions& options) {
  const Json config = io::read_json(options.config);
  if (config.contains("treatments") || config.contains("outcomes")) {
    throw InvalidArgument("the oracle needs a synthetic DGP; observed data have no known counterfactual truth");
  }
  Json scenario_json = config;
  scenario_json.erase("rep");
  scenario_json.erase("master_seed");
  Json wrapper = {{"scenarios", Json::array({scenario_json})}, {"n_reps", 1}};
  sim::ExperimentConfig exp = sim::experiment_from_json(wrapper, base_dir_of(options));
  sim::Scenario scenario = exp.scenarios.front();
  if (options.paper_scale) scenario.dgp.T = 500;
  const std::uint64_t seed = options.seed.value_or(config.value("master_seed", std::uint64_t{1}));
  const int rep = config.value("rep", 0);
  if (rep < 0) throw InvalidArgument("rep must be >= 0");

  const auto surfaces = std::make_shared<const sim::SpatialSurfaces>(sim::make_spatial_surfaces(scenario.dgp));
  const sim::SimPanel panel = sim::generate_panel(scenario.dgp, surfaces, sim::panel_stream(seed, rep, scenario.dgp));
  const IntensitySurface phi = sim::pilot_intervention_density(scenario.dgp, surfaces, seed);
  const sim::OracleResult truth =
      sim::compute_oracle(panel, phi, scenario.c_hp, scenario.c_hpp, scenario.M, scenario.basis,
                          sim::oracle_stream(seed, rep, scenario), {scenario.oracle_K});
  std::ostringstream csv;
  csv << "r,truth,mc_se\n";
  for (double r : scenario.r_grid) {
    csv << fmt(r) << ',' << csv_value(truth.tau(scenario.basis, r)) << ',' << csv_value(truth.tau_se(scenario.basis, r))
        << '\n';
  }
  io::atomic_write(options.out / "oracle_curve.csv", csv.str());
  io::write_json(options.out / "oracle.json", {{"scenario", sim::to_json(scenario)},
                                               {"master_seed", seed},
                                               {"rep", rep},
                                               {"K", truth.K},
                                               {"periods", truth.periods},
                                               {"beta", io::to_json(truth.beta)},
                                               {"beta_mc_se", io::to_json(truth.beta_se)}});
}

int run_command(const std::string& name, const CommandOptions& options, std::ostream& err) {
  try {
    if (name == "fit-propensity") {
      cmd_fit_propensity(options);
    } else if (name == "estimate") {
      cmd_estimate(options);
    } else if (name == "simulate") {
      cmd_simulate(options);
    } else if (name == "oracle") {
      cmd_oracle(options);
    } else {
      err << "unknown command: " << name << '\n';
      return kExitConfig;
    }
    return kExitOk;
  } catch (const OverlapViolation& e) {
    err << "overlap violation at period " << e.t() << ", location (" << e.x() << ", " << e.y() << "): " << e.what()
        << '\n';
    return kExitOverlap;
  } catch (const RankDeficient& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidArgument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace stcate::cli

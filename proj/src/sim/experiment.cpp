#include "stcate/sim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "stcate/cate.hpp"
#include "stcate/error.hpp"
#include "stcate/io.hpp"
#include "stcate/sim/oracle.hpp"

namespace stcate::sim {

namespace {

using Json = nlohmann::json;

std::string fmt(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string dgp_key(const DgpConfig& dgp) {
  Json j = to_json(dgp);
  j.erase("name");
  return j.dump();
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? kNaN : acc / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

DgpConfig resolve_dgp(const Json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    std::filesystem::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    const Json file = io::read_json(p);
    return dgp_from_json(file.contains("dgp") ? file.at("dgp") : file);
  }
  return dgp_from_json(j);
}

Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir) {
  Scenario s;
  try {
    if (!j.contains("dgp")) throw InvalidArgument("scenario lacks a dgp");
    s.dgp = resolve_dgp(j.at("dgp"), base_dir);
    s.M = j.value("M", s.M);
    if (j.contains("c")) {
      const auto c = j.at("c").get<std::vector<double>>();
      if (c.size() != 2) throw InvalidArgument("scenario field c must hold two scales");
      s.c_hp = c[0];
      s.c_hpp = c[1];
    }
    if (j.contains("basis")) s.basis = io::basis_from_json(j.at("basis"));
    s.r_grid = j.value("r_grid", s.r_grid);
    const double q = j.value("truncation_q", 0.95);
    if (j.contains("variants")) {
      s.variants.clear();
      for (const auto& name : j.at("variants").get<std::vector<std::string>>()) {
        s.variants.push_back(variant_from_name(name, q));
      }
    } else {
      s.variants = default_variants(q);
    }
    s.level = j.value("level", s.level);
    s.test_alpha = j.value("test_alpha", s.test_alpha);
    if (j.contains("q_mode")) s.q_mode = io::q_mode_from_string(j.at("q_mode").get<std::string>());
    s.oracle = j.value("oracle", s.oracle);
    s.oracle_K = j.value("oracle_K", s.oracle_K);
    s.name = j.value("name", s.dgp.name + "_M" + std::to_string(s.M) + "_c" + fmt(s.c_hp) + "v" + fmt(s.c_hpp));
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad scenario: ") + e.what());
  }
  s.validate();
  return s;
}

struct PanelEntry {
  std::optional<SimPanel> panel;
  std::optional<PropensityModel> model;
  std::string panel_error;
  std::string fit_error;
};

Json failures_json(const std::vector<std::pair<int, std::string>>& failures) {
  Json out = Json::array();
  for (const auto& [rep, msg] : failures) out.push_back({{"replication", rep}, {"error", msg}});
  return out;
}

}  // namespace

std::vector<EstimatorVariant> default_variants(double truncation_q) {
  return {{"ipw_true", WeightingMode::kIpw, true, 1.0},
          {"ipw_estimated", WeightingMode::kIpw, false, 1.0},
          {"ipw_truncated", WeightingMode::kIpw, false, truncation_q},
          {"hajek_true", WeightingMode::kHajek, true, 1.0},
          {"hajek_estimated", WeightingMode::kHajek, false, 1.0},
          {"hajek_truncated", WeightingMode::kHajek, false, truncation_q}};
}

EstimatorVariant variant_from_name(const std::string& name, double truncation_q) {
  for (const EstimatorVariant& v : default_variants(truncation_q)) {
    if (v.name == name) return v;
  }
  throw InvalidArgument("unknown estimator variant: " + name);
}

void Scenario::validate() const {
  dgp.validate();
  if (M < 1 || M > dgp.T) throw InvalidArgument("scenario M must lie in 1..T");
  if (!(c_hp > 0.0) || !(c_hpp > 0.0)) throw InvalidArgument("intervention scales must be positive");
  if (r_grid.empty()) throw InvalidArgument("r grid is empty");
  if (variants.empty()) throw InvalidArgument("no estimator variants");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("CI level must lie in (0, 1)");
  if (!(test_alpha > 0.0 && test_alpha < 1.0)) throw InvalidArgument("test level must lie in (0, 1)");
  if (oracle && oracle_K < 1) throw InvalidArgument("oracle_K must be >= 1");
}

Json to_json(const Scenario& s) {
  Json variants = Json::array();
  for (const auto& v : s.variants) variants.push_back({{"name", v.name}, {"truncation_q", v.truncation_q}});
  return {{"name", s.name},
          {"dgp", to_json(s.dgp)},
          {"M", s.M},
          {"c", {s.c_hp, s.c_hpp}},
          {"basis", io::to_json(s.basis)},
          {"r_grid", s.r_grid},
          {"variants", variants},
          {"level", s.level},
          {"test_alpha", s.test_alpha},
          {"q_mode", io::to_string(s.q_mode)},
          {"oracle", s.oracle},
          {"oracle_K", s.oracle_K}};
}

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw InvalidArgument("experiment configuration must be a JSON object");
  ExperimentConfig c;
  try {
    c.master_seed = j.value("master_seed", c.master_seed);
    c.n_reps = j.value("n_reps", c.n_reps);
    c.threads = j.value("threads", c.threads);
    if (j.contains("scenarios")) {
      for (const auto& s : j.at("scenarios")) c.scenarios.push_back(scenario_from_json(s, base_dir));
    }
    if (j.contains("grid")) {
      const Json& g = j.at("grid");
      const Json tmpl = g.at("template");
      const std::string prefix = tmpl.value("name", std::string("grid"));
      for (int M : g.at("M").get<std::vector<int>>()) {
        for (const auto& pair : g.at("c_pairs").get<std::vector<std::vector<double>>>()) {
          Json s = tmpl;
          s["M"] = M;
          s["c"] = pair;
          if (pair.size() != 2) throw InvalidArgument("grid c_pairs entries must hold two scales");
          s["name"] = prefix + "_M" + std::to_string(M) + "_c" + fmt(pair[0]) + "v" + fmt(pair[1]);
          c.scenarios.push_back(scenario_from_json(s, base_dir));
        }
      }
    }
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad experiment configuration: ") + e.what());
  }
  if (c.n_reps < 1) throw InvalidArgument("n_reps must be >= 1");
  if (c.threads < 1) throw InvalidArgument("threads must be >= 1");
  if (c.scenarios.empty()) throw InvalidArgument("experiment has no scenarios");
  std::map<std::string, int> seen;
  for (const auto& s : c.scenarios) {
    if (seen[s.name]++) throw InvalidArgument("duplicate scenario name: " + s.name);
  }
  return c;
}

void apply_paper_scale(ExperimentConfig& config) {
  config.n_reps = 500;
  for (Scenario& s : config.scenarios) s.dgp.T = 500;
}

SeedStream panel_stream(std::uint64_t master_seed, int rep, const DgpConfig& dgp) {
  return SeedStream{master_seed, hash_label("panel")}
      .child(static_cast<std::uint64_t>(rep))
      .child(std::string_view(dgp_key(dgp)));
}

SeedStream oracle_stream(std::uint64_t master_seed, int rep, const Scenario& scenario) {
  return SeedStream{master_seed, hash_label("oracle")}
      .child(static_cast<std::uint64_t>(rep))
      .child(std::string_view(dgp_key(scenario.dgp)))
      .child(static_cast<std::uint64_t>(scenario.M))
      .child(std::string_view(fmt(scenario.c_hp) + "," + fmt(scenario.c_hpp)));
}

IntensitySurface intervention_density(const SimPanel& panel) {
  std::vector<Location> all;
  for (const PointPattern& w : panel.treatments) all.insert(all.end(), w.points.begin(), w.points.end());
  if (all.empty()) throw NumericalFailure("no treatment events to estimate the intervention density");
  return estimate_density_kde(all, panel.raster);
}

IntensitySurface pilot_intervention_density(const DgpConfig& dgp, std::shared_ptr<const SpatialSurfaces> surfaces,
                                            std::uint64_t master_seed) {
  const SeedStream stream = SeedStream{master_seed, hash_label("phi")}.child(std::string_view(dgp_key(dgp)));
  return intervention_density(generate_panel(dgp, std::move(surfaces), stream));
}

ScenarioRun run_scenario_replication(const Scenario& scenario, const SimPanel& panel, const IntensitySurface& phi,
                                     const PropensityModel* estimated, const std::string& fit_error,
                                     std::uint64_t master_seed, int rep) {
  const auto start = std::chrono::steady_clock::now();
  ScenarioRun run;
  const std::size_t nr = scenario.r_grid.size();
  run.truth.assign(nr, kNaN);
  try {
    if (scenario.oracle) {
      const OracleResult truth = compute_oracle(panel, phi, scenario.c_hp, scenario.c_hpp, scenario.M, scenario.basis,
                                                oracle_stream(master_seed, rep, scenario), {scenario.oracle_K});
      run.truth_beta = truth.beta;
      run.truth_beta_se = truth.beta_se;
      for (std::size_t i = 0; i < nr; ++i) run.truth[i] = truth.tau(scenario.basis, scenario.r_grid[i]);
    }
    const Eigen::MatrixXd counts = outcome_count_matrix(panel.outcomes, panel.pixels);
    const InterventionSpec hp(phi, scenario.c_hp, scenario.M, "h_prime");
    const InterventionSpec hpp(phi, scenario.c_hpp, scenario.M, "h_double_prime");
    const PropensityModel true_model(panel.covariates, panel.config.true_propensity_gamma());

    std::optional<std::pair<WeightSeries, WeightSeries>> w_true, w_est;
    auto base_weights = [&](bool true_ps) -> const std::pair<WeightSeries, WeightSeries>& {
      auto& slot = true_ps ? w_true : w_est;
      if (!slot) {
        const PropensityModel* model = true_ps ? &true_model : estimated;
        if (model == nullptr) throw NumericalFailure("propensity fit failed: " + fit_error);
        std::vector<IntensitySurface> surfaces;
        surfaces.reserve(panel.treatments.size());
        for (int t = 1; t <= panel.T(); ++t) surfaces.push_back(model->intensity(t));
        const DenominatorFn denominator = [&surfaces](int t) { return surfaces[t - 1]; };
        slot.emplace(compute_log_weights(hp, denominator, panel.treatments),
                     compute_log_weights(hpp, denominator, panel.treatments));
      }
      return *slot;
    };

    for (const EstimatorVariant& variant : scenario.variants) {
      VariantRun vr;
      try {
        const auto& base = base_weights(variant.true_ps);
        WeightSeries w1 = base.first;
        WeightSeries w2 = base.second;
        if (variant.truncation_q < 1.0) {
          w1 = truncate_weights(w1, variant.truncation_q);
          w2 = truncate_weights(w2, variant.truncation_q);
        }
        double acc1 = 0.0, acc2 = 0.0;
        for (double v : w1.weights()) acc1 += v;
        for (double v : w2.weights()) acc2 += v;
        vr.mean_weight_hp = acc1 / static_cast<double>(w1.size());
        vr.mean_weight_hpp = acc2 / static_cast<double>(w2.size());
        const bool hajek = variant.mode == WeightingMode::kHajek;
        if (hajek) {
          w1 = stabilize_hajek(w1);
          w2 = stabilize_hajek(w2);
        }
        const PseudoOutcomePanel p1 = build_pseudo_outcomes(w1, counts, panel.pixels, hp.id());
        const PseudoOutcomePanel p2 = build_pseudo_outcomes(w2, counts, panel.pixels, hpp.id());
        const CateFit fit = fit_cate(panel.moderator, p1, p2, scenario.M, scenario.basis);
        const VarianceBound bound =
            hajek ? estimate_variance_bound(fit, w1, w2, scenario.q_mode) : ipw_variance_bound(fit);
        vr.beta = fit.beta_bar;
        vr.bound_var = bound.Sigma_hat.diagonal() / static_cast<double>(bound.n_eff);
        for (double r : scenario.r_grid) {
          const Interval ci = cate_confidence_interval(fit, bound, r, scenario.level);
          vr.estimate.push_back(evaluate_cate(fit, r));
          vr.lo.push_back(ci.lo);
          vr.hi.push_back(ci.hi);
          vr.se.push_back(cate_standard_error(fit, bound, r));
        }
        if (scenario.basis.L() > 0) {
          try {
            const HeterogeneityTest test = test_no_heterogeneity(fit, bound);
            vr.T_c = test.T_c;
            vr.p_value = test.p_value;
          } catch (const NumericalFailure&) {
            // Singular bound: the test is reported as unavailable.
          }
        }
        vr.ok = true;
      } catch (const Error& e) {
        vr.error = e.what();
      }
      run.variants.push_back(std::move(vr));
    }
    run.ok = true;
  } catch (const Error& e) {
    run.error = e.what();
    run.variants.assign(scenario.variants.size(), VariantRun{});
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

ScenarioSummary summarize(const Scenario& scenario, const std::vector<ScenarioRun>& runs) {
  ScenarioSummary out;
  out.scenario = scenario;
  out.n_reps = static_cast<int>(runs.size());
  const std::size_t nr = scenario.r_grid.size();
  const Eigen::Index nb = scenario.basis.columns();
  for (std::size_t rep = 0; rep < runs.size(); ++rep) {
    out.seconds += runs[rep].seconds;
    if (runs[rep].ok) {
      ++out.n_ok;
    } else {
      out.failures.emplace_back(static_cast<int>(rep), runs[rep].error);
    }
  }
  for (std::size_t v = 0; v < scenario.variants.size(); ++v) {
    VariantSummary vs;
    vs.name = scenario.variants[v].name;
    std::vector<std::size_t> ok;
    for (std::size_t rep = 0; rep < runs.size(); ++rep) {
      if (!runs[rep].ok) continue;
      const VariantRun& vr = runs[rep].variants[v];
      if (vr.ok) {
        ok.push_back(rep);
      } else {
        vs.failures.emplace_back(static_cast<int>(rep), vr.error);
      }
    }
    vs.n_ok = static_cast<int>(ok.size());
    for (std::size_t i = 0; i < nr; ++i) {
      CurvePoint cp;
      cp.r = scenario.r_grid[i];
      std::vector<double> est, truth, diff, se;
      int covered = 0;
      for (std::size_t rep : ok) {
        const VariantRun& vr = runs[rep].variants[v];
        est.push_back(vr.estimate[i]);
        se.push_back(vr.se[i]);
        const double tr = runs[rep].truth[i];
        if (std::isfinite(tr)) {
          truth.push_back(tr);
          diff.push_back(vr.estimate[i] - tr);
          if (vr.lo[i] <= tr && tr <= vr.hi[i]) ++covered;
        }
      }
      cp.n = static_cast<int>(est.size());
      cp.mean_estimate = mean_of(est);
      cp.mc_sd = sd_of(est);
      cp.mean_se = mean_of(se);
      if (!truth.empty()) {
        cp.truth = mean_of(truth);
        cp.bias = mean_of(diff);
        cp.coverage = static_cast<double>(covered) / static_cast<double>(truth.size());
      }
      vs.curve.push_back(cp);
    }
    vs.beta_mean = vs.beta_sd = vs.truth_beta_mean = vs.truth_beta_sd = vs.diff_sd = vs.oracle_se_rms =
        vs.bound_sd = Eigen::VectorXd::Constant(nb, kNaN);
    for (Eigen::Index k = 0; k < nb; ++k) {
      std::vector<double> b, tb, d, ose, bv;
      for (std::size_t rep : ok) {
        const VariantRun& vr = runs[rep].variants[v];
        b.push_back(vr.beta[k]);
        bv.push_back(vr.bound_var[k]);
        if (runs[rep].truth_beta.size() == nb) {
          tb.push_back(runs[rep].truth_beta[k]);
          d.push_back(vr.beta[k] - runs[rep].truth_beta[k]);
          ose.push_back(runs[rep].truth_beta_se[k] * runs[rep].truth_beta_se[k]);
        }
      }
      vs.beta_mean[k] = mean_of(b);
      vs.beta_sd[k] = sd_of(b);
      vs.bound_sd[k] = std::sqrt(mean_of(bv));
      if (!tb.empty()) {
        vs.truth_beta_mean[k] = mean_of(tb);
        vs.truth_beta_sd[k] = sd_of(tb);
        vs.diff_sd[k] = sd_of(d);
        vs.oracle_se_rms[k] = std::sqrt(mean_of(ose));
      }
    }
    int rejected = 0;
    for (std::size_t rep : ok) {
      const double p = runs[rep].variants[v].p_value;
      if (!std::isfinite(p)) continue;
      ++vs.test_count;
      if (p < scenario.test_alpha) ++rejected;
    }
    if (vs.test_count > 0) vs.rejection_rate = static_cast<double>(rejected) / vs.test_count;
    out.variants.push_back(std::move(vs));
  }
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  if (config.scenarios.empty()) throw InvalidArgument("experiment has no scenarios");
  if (config.n_reps < 1 || config.threads < 1) throw InvalidArgument("n_reps and threads must be >= 1");
  for (const Scenario& s : config.scenarios) s.validate();

  std::map<std::string, std::shared_ptr<const SpatialSurfaces>> surfaces;
  for (const Scenario& s : config.scenarios) {
    const std::string key = dgp_key(s.dgp);
    if (!surfaces.count(key)) surfaces[key] = std::make_shared<const SpatialSurfaces>(make_spatial_surfaces(s.dgp));
  }
  std::map<std::string, IntensitySurface> phis;
  for (const auto& [key, surf] : surfaces) {
    const auto it = std::find_if(config.scenarios.begin(), config.scenarios.end(),
                                 [&key](const Scenario& s) { return dgp_key(s.dgp) == key; });
    phis.emplace(key, pilot_intervention_density(it->dgp, surf, config.master_seed));
  }

  const std::size_t n_scen = config.scenarios.size();
  std::vector<std::vector<ScenarioRun>> runs(n_scen, std::vector<ScenarioRun>(static_cast<std::size_t>(config.n_reps)));

  auto replicate = [&](int rep) {
    std::map<std::string, PanelEntry> cache;
    for (std::size_t s = 0; s < n_scen; ++s) {
      const Scenario& scenario = config.scenarios[s];
      const std::string key = dgp_key(scenario.dgp);
      auto it = cache.find(key);
      if (it == cache.end()) {
        PanelEntry entry;
        try {
          entry.panel.emplace(generate_panel(scenario.dgp, surfaces.at(key), panel_stream(config.master_seed, rep, scenario.dgp)));
          try {
            const FitReport fit = fit_propensity(entry.panel->covariates, entry.panel->treatments);
            if (fit.converged) {
              entry.model.emplace(entry.panel->covariates, fit.gamma_hat);
            } else {
              entry.fit_error = "did not converge";
            }
          } catch (const Error& e) {
            entry.fit_error = e.what();
          }
        } catch (const Error& e) {
          entry.panel_error = e.what();
        }
        it = cache.emplace(key, std::move(entry)).first;
      }
      const PanelEntry& entry = it->second;
      ScenarioRun& slot = runs[s][static_cast<std::size_t>(rep)];
      if (!entry.panel) {
        slot.error = "panel generation failed: " + entry.panel_error;
        slot.variants.assign(scenario.variants.size(), VariantRun{});
        continue;
      }
      slot = run_scenario_replication(scenario, *entry.panel, phis.at(key), entry.model ? &*entry.model : nullptr, entry.fit_error,
                                      config.master_seed, rep);
    }
  };

  std::atomic<int> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    while (true) {
      const int rep = next.fetch_add(1);
      if (rep >= config.n_reps) return;
      try {
        replicate(rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next.store(config.n_reps);
        return;
      }
    }
  };
  const int n_threads = std::min(config.threads, config.n_reps);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  ExperimentReport report;
  report.master_seed = config.master_seed;
  report.n_reps = config.n_reps;
  for (std::size_t s = 0; s < n_scen; ++s) report.scenarios.push_back(summarize(config.scenarios[s], runs[s]));
  return report;
}

const ScenarioSummary& ExperimentReport::scenario(const std::string& name) const {
  for (const auto& s : scenarios) {
    if (s.scenario.name == name) return s;
  }
  throw InvalidArgument("no scenario named " + name);
}

const VariantSummary& ExperimentReport::variant(const std::string& scenario_name, const std::string& variant_name) const {
  for (const auto& v : scenario(scenario_name).variants) {
    if (v.name == variant_name) return v;
  }
  throw InvalidArgument("no variant named " + variant_name);
}

Json report_json(const ExperimentReport& report) {
  Json scenarios = Json::array();
  for (const ScenarioSummary& s : report.scenarios) {
    Json variants = Json::array();
    for (const VariantSummary& v : s.variants) {
      Json curve = Json::array();
      for (const CurvePoint& c : v.curve) {
        curve.push_back({{"r", c.r},
                         {"truth", c.truth},
                         {"mean_estimate", c.mean_estimate},
                         {"bias", c.bias},
                         {"coverage", c.coverage},
                         {"mc_sd", c.mc_sd},
                         {"mean_se", c.mean_se},
                         {"n", c.n}});
      }
      variants.push_back({{"name", v.name},
                          {"n_ok", v.n_ok},
                          {"failures", failures_json(v.failures)},
                          {"curve", curve},
                          {"beta_mean", io::to_json(v.beta_mean)},
                          {"beta_mc_sd", io::to_json(v.beta_sd)},
                          {"truth_beta_mean", io::to_json(v.truth_beta_mean)},
                          {"truth_beta_sd", io::to_json(v.truth_beta_sd)},
                          {"error_sd", io::to_json(v.diff_sd)},
                          {"oracle_se_rms", io::to_json(v.oracle_se_rms)},
                          {"bound_sd", io::to_json(v.bound_sd)},
                          {"test_count", v.test_count},
                          {"rejection_rate", v.rejection_rate}});
    }
    scenarios.push_back({{"scenario", to_json(s.scenario)},
                         {"n_reps", s.n_reps},
                         {"n_ok", s.n_ok},
                         {"failures", failures_json(s.failures)},
                         {"variants", variants}});
  }
  return {{"master_seed", report.master_seed}, {"n_reps", report.n_reps}, {"scenarios", scenarios}};
}

std::string curves_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "scenario,variant,r,truth,mean_estimate,bias,coverage,mc_sd,mean_se,n\n";
  for (const ScenarioSummary& s : report.scenarios) {
    for (const VariantSummary& v : s.variants) {
      for (const CurvePoint& c : v.curve) {
        out << s.scenario.name << ',' << v.name << ',' << fmt(c.r) << ',' << fmt(c.truth) << ','
            << fmt(c.mean_estimate) << ',' << fmt(c.bias) << ',' << fmt(c.coverage) << ',' << fmt(c.mc_sd) << ','
            << fmt(c.mean_se) << ',' << c.n << '\n';
      }
    }
  }
  return out.str();
}

void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  io::write_json(dir / "report.json", report_json(report));
  io::atomic_write(dir / "curves.csv", curves_csv(report));
  Json timing = Json::array();
  for (const ScenarioSummary& s : report.scenarios) {
    timing.push_back({{"scenario", s.scenario.name}, {"seconds", s.seconds}});
  }
  io::write_json(dir / "timing.json", timing);
}

}  // namespace stcate::sim

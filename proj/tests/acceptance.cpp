// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// writes acceptance.json into --out. Exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "stcate/cate.hpp"
#include "stcate/inference.hpp"
#include "stcate/io.hpp"
#include "stcate/propensity.hpp"
#include "stcate/sim/dgp.hpp"
#include "stcate/sim/experiment.hpp"
#include "stcate/weights.hpp"

using namespace stcate;
using namespace stcate::sim;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 20240917;

struct Outcome {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  |  " << detail << std::endl;
}

std::string num(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

DgpConfig load_dgp(const std::string& name) {
  const Json j = io::read_json(fs::path(STCATE_CONFIG_DIR) / (name + ".json"));
  return dgp_from_json(j.contains("dgp") ? j.at("dgp") : j);
}

Scenario make_scenario(const std::string& name, const DgpConfig& dgp, int M, bool oracle) {
  Scenario s;
  s.name = name;
  s.dgp = dgp;
  s.M = M;
  s.c_hp = 3.0;
  s.c_hpp = 7.0;
  s.oracle = oracle;
  s.oracle_K = 100;
  return s;
}

ExperimentReport run_study(const std::vector<Scenario>& scenarios, int reps, double* seconds = nullptr) {
  ExperimentConfig e;
  e.master_seed = kSeed;
  e.n_reps = reps;
  e.threads = 1;
  e.scenarios = scenarios;
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r = run_experiment(e);
  if (seconds) *seconds = seconds_since(t0);
  return r;
}

std::pair<WeightSeries, WeightSeries> weights_for(const SimPanel& panel, const IntensitySurface& phi,
                                                  const PropensityModel& model, double c1, double c2, int M) {
  std::vector<IntensitySurface> den;
  for (int t = 1; t <= panel.T(); ++t) den.push_back(model.intensity(t));
  const DenominatorFn fn = [&den](int t) { return den[t - 1]; };
  return {compute_log_weights(InterventionSpec(phi, c1, M), fn, panel.treatments),
          compute_log_weights(InterventionSpec(phi, c2, M), fn, panel.treatments)};
}

void criterion_1(const DgpConfig& dgp) {
  const SimPanel panel = generate_panel(dgp, panel_stream(kSeed, 0, dgp));
  const IntensitySurface phi = intervention_density(panel);
  const FitReport fit = fit_propensity(panel.covariates, panel.treatments);
  const PropensityModel model(panel.covariates, fit.gamma_hat);
  const Eigen::MatrixXd counts = outcome_count_matrix(panel.outcomes, panel.pixels);
  double worst_beta = 0.0, worst_tc = 0.0;
  for (int M : {1, 3}) {
    for (bool hajek : {false, true}) {
      auto [w1, w2] = weights_for(panel, phi, model, 5.0, 5.0, M);
      if (hajek) {
        w1 = stabilize_hajek(w1);
        w2 = stabilize_hajek(w2);
      }
      const CateFit cf = fit_cate(panel.moderator, build_pseudo_outcomes(w1, counts, panel.pixels),
                                  build_pseudo_outcomes(w2, counts, panel.pixels), M, BasisSpec::binary());
      for (const TimeFit& t : cf.periods) worst_beta = std::max(worst_beta, t.beta.cwiseAbs().maxCoeff());
      const VarianceBound b = hajek ? estimate_variance_bound(cf, w1, w2) : ipw_variance_bound(cf);
      worst_tc = std::max(worst_tc, std::abs(test_no_heterogeneity(cf, b).T_c));
    }
  }
  const bool pass = worst_beta <= 1e-12 && worst_tc <= 1e-12;
  report(1, "null contrast exactness", pass,
         "max |beta_t| = " + num(worst_beta) + ", max |T_c| = " + num(worst_tc) + " (tol 1e-12)");
}

void criterion_2(const DgpConfig& dgp) {
  double worst = 0.0;
  int runs = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const SimPanel panel = generate_panel(dgp, panel_stream(kSeed, rep, dgp));
    const IntensitySurface phi = intervention_density(panel);
    const FitReport fit = fit_propensity(panel.covariates, panel.treatments);
    const PropensityModel est(panel.covariates, fit.gamma_hat);
    const PropensityModel truth(panel.covariates, dgp.true_propensity_gamma());
    for (const PropensityModel* model : {&est, &truth}) {
      for (int M : {1, 3, 7}) {
        for (double q : {1.0, 0.95}) {
          auto [w1, w2] = weights_for(panel, phi, *model, 3.0, 7.0, M);
          for (WeightSeries* w : {&w1, &w2}) {
            const WeightSeries s = stabilize_hajek(truncate_weights(*w, q));
            const auto ws = s.weights();
            double mean = 0.0;
            for (double v : ws) mean += v;
            mean /= static_cast<double>(ws.size());
            worst = std::max(worst, std::abs(mean - 1.0));
            ++runs;
          }
        }
      }
    }
  }
  report(2, "Hajek normalization", worst <= 1e-12,
         "max |mean stabilized weight - 1| = " + num(worst) + " over " + std::to_string(runs) + " series (tol 1e-12)");
}

void criterion_3(const DgpConfig& dgp) {
  const SimPanel panel = generate_panel(dgp, panel_stream(kSeed, 1, dgp));
  const PropensityLikelihood lik(panel.covariates, panel.treatments, 1, panel.T());
  const Eigen::VectorXd truth = dgp.true_propensity_gamma();
  std::mt19937_64 rng(kSeed);
  std::normal_distribution<double> jitter(0.0, 0.3);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd g = truth;
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) += jitter(rng);
    const Eigen::VectorXd a = lik.gradient(g);
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(g(i)));
      Eigen::VectorXd gp = g, gm = g;
      gp(i) += h;
      gm(i) -= h;
      const double fd = (lik.value(gp) - lik.value(gm)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - a(i)) / std::max(1.0, std::abs(a(i))));
    }
  }
  // Intercept-only model on the same events.
  auto stack = std::make_shared<CovariateStack>(panel.raster, std::vector<std::string>{"intercept"});
  for (int t = 1; t <= panel.T(); ++t) stack->add_period(Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(panel.raster.size()), 1));
  const FitReport fit = fit_propensity(stack, panel.treatments);
  long n = 0;
  for (const auto& w : panel.treatments) n += static_cast<long>(w.size());
  const double expected = std::log(static_cast<double>(n) / (panel.T() * panel.raster.window().area()));
  const double err = std::abs(fit.gamma_hat(0) - expected);
  report(3, "propensity gradient and intercept MLE", worst < 1e-5 && err <= 1e-8 && fit.converged,
         "max rel grad err = " + num(worst) + " (tol 1e-5), intercept err = " + num(err) + " (tol 1e-8)");
}

void criterion_4() {
  const DgpConfig dgp = load_dgp("spatial");
  const auto surfaces = std::make_shared<const SpatialSurfaces>(make_spatial_surfaces(dgp));
  const SimPanel panel = generate_panel(dgp, surfaces, panel_stream(kSeed, 0, dgp));
  // phi from an independent pilot panel so it is fixed relative to the weights.
  const IntensitySurface phi = pilot_intervention_density(dgp, surfaces, kSeed);
  const PropensityModel truth(panel.covariates, dgp.true_propensity_gamma());
  const auto [w, unused] = weights_for(panel, phi, truth, 5.0, 5.0, 1);
  const auto ws = w.weights();
  const double n = static_cast<double>(ws.size());
  double mean = 0.0;
  for (double v : ws) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : ws) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  const double z = (mean - 1.0) / se;
  report(4, "importance weight identity", std::abs(z) <= 3.0,
         "mean rho = " + num(mean) + ", MC SE = " + num(se) + ", z = " + num(z) + " (|z| <= 3, T = " +
             std::to_string(panel.T()) + ")");
}

struct Check {
  bool pass = true;
  std::string text;
  void add(bool ok, const std::string& s) {
    pass = pass && ok;
    if (!text.empty()) text += "; ";
    text += s + (ok ? "" : " [x]");
  }
};

void study_a(const DgpConfig& dgp, int reps, const fs::path& out) {
  double secs_m1 = 0.0;
  const ExperimentReport r1 = run_study({make_scenario("nocarry_M1", dgp, 1, true)}, reps, &secs_m1);
  write_report(r1, out / "study_m1");
  const ExperimentReport r3 = run_study({make_scenario("nocarry_M3", dgp, 3, true)}, reps);
  write_report(r3, out / "study_m3");

  const std::vector<std::string> hajek = {"hajek_true", "hajek_estimated"};

  Check c5;
  for (const auto& name : hajek) {
    const VariantSummary& v = r1.variant("nocarry_M1", name);
    for (Eigen::Index j = 0; j < v.beta_mean.size(); ++j) {
      const double diff = v.beta_mean(j) - v.truth_beta_mean(j);
      const double se = v.diff_sd(j) / std::sqrt(static_cast<double>(v.n_ok));
      c5.add(std::abs(diff) <= 3.0 * se, name + " b" + std::to_string(j) + ": diff " + num(diff) + ", 3SE " + num(3 * se));
    }
    c5.add(v.n_ok == reps, name + " ok " + std::to_string(v.n_ok) + "/" + std::to_string(reps));
  }
  c5.add(secs_m1 <= 600.0, "runtime " + num(secs_m1, 3) + " s (<= 600)");
  report(5, "oracle agreement", c5.pass, c5.text);

  Check c6, c7;
  for (const auto& name : hajek) {
    for (const CurvePoint& p : r1.variant("nocarry_M1", name).curve) {
      c6.add(p.coverage >= 0.88 && p.coverage <= 0.99, name + " r=" + num(p.r) + ": " + num(p.coverage));
      c7.add(std::abs(p.bias) <= 0.05, name + " r=" + num(p.r) + ": " + num(p.bias));
    }
  }
  report(6, "coverage in [0.88, 0.99]", c6.pass, c6.text);
  report(7, "|bias| <= 0.05", c7.pass, c7.text);

  Check c8;
  for (const std::string ps : {"true", "estimated"}) {
    const auto& h = r3.variant("nocarry_M3", "hajek_" + ps).curve;
    const auto& i = r3.variant("nocarry_M3", "ipw_" + ps).curve;
    for (std::size_t k = 0; k < h.size(); ++k) {
      const double ratio = h[k].mc_sd / i[k].mc_sd;
      c8.add(ratio <= 1.0, ps + " r=" + num(h[k].r) + ": " + num(ratio));
    }
  }
  report(8, "Hajek/IPW MC-SD ratio <= 1 at M=3", c8.pass, c8.text);

  Check c10;
  for (const auto* rep : {&r1, &r3}) {
    const ScenarioSummary& s = rep->scenarios.front();
    for (const auto& name : hajek) {
      const VariantSummary& v = rep->variant(s.scenario.name, name);
      for (Eigen::Index j = 0; j < v.beta_sd.size(); ++j) {
        const double ratio = v.bound_sd(j) / v.beta_sd(j);
        c10.add(ratio >= 0.9, "M" + std::to_string(s.scenario.M) + " " + name + " b" + std::to_string(j) + ": " +
                                  num(ratio));
      }
    }
  }
  report(10, "bound SD / MC SD >= 0.9", c10.pass, c10.text);
}

void criterion_9(int reps, int power_reps, const fs::path& out) {
  Scenario level = make_scenario("homogeneous", load_dgp("homogeneous"), 1, false);
  const ExperimentReport rl = run_study({level}, reps);
  write_report(rl, out / "study_level");
  Scenario power = make_scenario("strong_interaction", load_dgp("strong_interaction"), 1, false);
  const ExperimentReport rp = run_study({power}, power_reps);
  write_report(rp, out / "study_power");
  Check c9;
  for (const std::string name : {"hajek_true", "hajek_estimated"}) {
    const VariantSummary& v = rl.variant("homogeneous", name);
    c9.add(v.rejection_rate <= 0.08, "level " + name + ": " + num(v.rejection_rate) + " of " +
                                         std::to_string(v.test_count));
  }
  const VariantSummary& p = rp.variant("strong_interaction", "hajek_estimated");
  c9.add(p.rejection_rate >= 0.8, "power hajek_estimated: " + num(p.rejection_rate) + " of " +
                                      std::to_string(p.test_count));
  report(9, "test level <= 0.08 and power >= 0.8", c9.pass, c9.text);
}

void criterion_11(const DgpConfig& base, const fs::path& out) {
  DgpConfig dgp = base;
  dgp.T = 40;
  ExperimentConfig e;
  e.master_seed = kSeed;
  e.n_reps = 4;
  Scenario a = make_scenario("det_M1", dgp, 1, true);
  a.oracle_K = 5;
  Scenario b = make_scenario("det_M2", dgp, 2, true);
  b.oracle_K = 5;
  e.scenarios = {a, b};
  const std::vector<std::pair<int, std::string>> runs = {{1, "t1"}, {3, "t3"}, {1, "t1_again"}};
  for (const auto& [threads, dir] : runs) {
    e.threads = threads;
    write_report(run_experiment(e), out / "determinism" / dir);
  }
  bool same = true;
  for (const char* f : {"report.json", "curves.csv"}) {
    const std::string ref = io::read_text(out / "determinism" / "t1" / f);
    for (const char* d : {"t3", "t1_again"}) same = same && io::read_text(out / "determinism" / d / f) == ref;
  }
  report(11, "byte-identical reports across runs and thread counts", same,
         "report.json and curves.csv compared for threads 1, 3 and a repeat run");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::string out = "acceptance_out";
  int reps = 200;
  int power_reps = 100;
  app.add_option("--out", out, "Output directory");
  app.add_option("--reps", reps, "Replications for the Monte Carlo studies");
  app.add_option("--power-reps", power_reps, "Replications for the power check");
  CLI11_PARSE(app, argc, argv);
  const fs::path dir(out);
  fs::create_directories(dir);

  const auto t0 = std::chrono::steady_clock::now();
  const DgpConfig nocarry = load_dgp("binary_nocarry");
  try {
    criterion_1(nocarry);
    criterion_2(nocarry);
    criterion_3(nocarry);
    criterion_4();
    study_a(nocarry, reps, dir);
    criterion_9(reps, power_reps, dir);
    criterion_11(nocarry, dir);
  } catch (const std::exception& e) {
    std::cout << "FAIL  aborted: " << e.what() << std::endl;
    return 1;
  }

  std::sort(g_results.begin(), g_results.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  Json j = Json::array();
  int failed = 0;
  std::cout << "\nsummary\n";
  for (const Outcome& r : g_results) {
    std::cout << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.name << '\n';
    j.push_back({{"criterion", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
    failed += r.pass ? 0 : 1;
  }
  io::write_json(dir / "acceptance.json", {{"results", j}, {"reps", reps}, {"seconds", seconds_since(t0)}});
  std::cout << (g_results.size() - failed) << "/" << g_results.size() << " criteria passed in "
            << num(seconds_since(t0), 4) << " s\n";
  return failed == 0 ? 0 : 1;
}

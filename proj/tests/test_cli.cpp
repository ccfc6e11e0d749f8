#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "stcate/cli/commands.hpp"
#include "stcate/io.hpp"
#include "stcate/sim/dgp.hpp"

using namespace stcate;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

sim::DgpConfig small_config() {
  sim::DgpConfig c;
  c.name = "cli";
  c.T = 30;
  c.raster_n = 16;
  c.pixel_n = 8;
  c.alpha0 = -3.2;
  c.gamma0 = -1.8;
  c.moderator = sim::ModeratorChoice::kBinary;
  return c;
}

// Exports a simulated panel in the external data layout.
struct Dataset {
  fs::path dir;
  sim::SimPanel panel;
  Json config;

  Dataset() : dir(fs::temp_directory_path() / "stcate_cli_test"), panel(sim::generate_panel(small_config(), SeedStream{4, 4})) {
    fs::remove_all(dir);
    fs::create_directories(dir / "cov");
    io::write_points_csv(dir / "w.csv", panel.treatments);
    io::write_points_csv(dir / "y.csv", panel.outcomes);
    const CovariateStack& cov = *panel.covariates;
    io::write_raster_csv(dir / "cov" / "x1.csv", cov.covariate(1, 1));
    io::write_raster_csv(dir / "cov" / "x2.csv", cov.covariate(1, 2));
    for (int t = 1; t <= panel.T(); ++t) {
      io::write_raster_csv(dir / "cov" / ("x3_" + std::to_string(t) + ".csv"), cov.covariate(t, 3));
      io::write_raster_csv(dir / "cov" / ("x4_" + std::to_string(t) + ".csv"), cov.covariate(t, 4));
    }
    io::atomic_write(dir / "mod.csv", io::moderator_to_csv(panel.moderator));
    config = {{"treatments", "w.csv"},
              {"outcomes", "y.csv"},
              {"T", panel.T()},
              {"covariates",
               {{{"name", "intercept"}},
                {{"name", "x1"}, {"raster", "cov/x1.csv"}},
                {{"name", "x2"}, {"raster", "cov/x2.csv"}},
                {{"name", "x3"}, {"raster_pattern", "cov/x3_{t}.csv"}},
                {{"name", "x4"}, {"raster_pattern", "cov/x4_{t}.csv"}},
                {{"name", "w_prev"}, {"smoothed", "treatments"}, {"lag", 1}, {"decay", 2.0}},
                {{"name", "y_prev"}, {"smoothed", "outcomes"}, {"lag", 1}, {"decay", 2.0}}}},
              {"pixels", {{"nx", 8}, {"ny", 8}}},
              {"moderators", {{{"name", "near_capital"}, {"file", "mod.csv"}, {"kind", "binary"}}}},
              {"intervention", {{"phi", "kde"}, {"c", {3, 7}}, {"M", {1, 2}}}}};
  }

  int run(const std::string& cmd, const Json& cfg, const std::string& out, std::string* err = nullptr) const {
    const fs::path path = dir / (out + ".json");
    io::write_json(path, cfg);
    cli::CommandOptions opt;
    opt.config = path;
    opt.out = dir / out;
    std::ostringstream e;
    const int code = cli::run_command(cmd, opt, e);
    if (err) *err = e.str();
    return code;
  }
};

}  // namespace

TEST_CASE("loaded covariates reproduce the simulated design") {
  const Dataset d;
  const cli::AnalysisData data = cli::load_analysis_data(d.config, d.dir);
  CHECK(data.T == d.panel.T());
  REQUIRE(data.covariates->names() == d.panel.covariates->names());
  double worst = 0.0;
  for (int t = 1; t <= data.T; ++t) {
    worst = std::max(worst, (data.covariates->design(t) - d.panel.covariates->design(t)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("fit-propensity writes the model and predictions") {
  const Dataset d;
  REQUIRE(d.run("fit-propensity", d.config, "fit") == cli::kExitOk);
  const Json model = io::read_json(d.dir / "fit" / "propensity_model.json");
  const FitReport direct = fit_propensity(d.panel.covariates, d.panel.treatments);
  const Eigen::VectorXd gamma = io::vector_from_json(model.at("gamma"));
  CHECK((gamma - direct.gamma_hat).cwiseAbs().maxCoeff() < 1e-6);
  const std::string pred = io::read_text(d.dir / "fit" / "propensity_predictions.csv");
  CHECK(pred.rfind("t,observed,predicted_full,predicted_train,in_train\n", 0) == 0);
}

TEST_CASE("estimate writes curves, weights and a summary") {
  const Dataset d;
  Json cfg = d.config;
  REQUIRE(d.run("fit-propensity", cfg, "fit2") == cli::kExitOk);
  cfg["propensity"] = {{"model", "fit2/propensity_model.json"}};
  std::string err;
  REQUIRE_MESSAGE(d.run("estimate", cfg, "est", &err) == cli::kExitOk, err);
  for (const char* f : {"cate_near_capital_M1.csv", "cate_near_capital_M2.csv", "weights_h_prime_M1.csv",
                        "weights_h_double_prime_M2.csv", "estimate_summary.json"}) {
    CHECK_MESSAGE(fs::exists(d.dir / "est" / f), f);
  }
  const std::string curve = io::read_text(d.dir / "est" / "cate_near_capital_M1.csv");
  CHECK(curve.find("difference,NA,") != std::string::npos);
  const Json summary = io::read_json(d.dir / "est" / "estimate_summary.json");
  CHECK(summary.at("results").size() == 2);
  CHECK(summary.at("propensity").at("source") == "stored");
}

TEST_CASE("exit codes") {
  const Dataset d;
  Json bad = d.config;
  bad.erase("treatments");
  std::string err;
  CHECK(d.run("estimate", bad, "bad1", &err) == cli::kExitConfig);
  CHECK(err.find("treatments") != std::string::npos);

  Json dup = d.config;
  dup["covariates"].push_back({{"name", "x1_again"}, {"raster", "cov/x1.csv"}});
  CHECK(d.run("fit-propensity", dup, "bad2") == cli::kExitNumerical);

  CHECK(d.run("oracle", d.config, "bad3", &err) == cli::kExitConfig);
  CHECK(d.run("unknown", d.config, "bad4") == cli::kExitConfig);

  const std::string cmd = std::string(STCATE_CLI_PATH) + " estimate > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == cli::kExitConfig);
}

TEST_CASE("simulate and oracle commands") {
  const Dataset d;
  sim::DgpConfig c = small_config();
  c.T = 8;
  const Json sim_cfg = {{"master_seed", 3},
                        {"n_reps", 2},
                        {"scenarios", {{{"name", "s"}, {"dgp", sim::to_json(c)}, {"M", 1}, {"oracle_K", 3}}}}};
  std::string err;
  REQUIRE_MESSAGE(d.run("simulate", sim_cfg, "sim", &err) == cli::kExitOk, err);
  CHECK(fs::exists(d.dir / "sim" / "report.json"));
  CHECK(fs::exists(d.dir / "sim" / "curves.csv"));
  CHECK(fs::exists(d.dir / "sim" / "timing.json"));

  const Json oracle_cfg = {{"name", "o"}, {"dgp", sim::to_json(c)}, {"M", 2}, {"oracle_K", 4}, {"rep", 1}};
  REQUIRE_MESSAGE(d.run("oracle", oracle_cfg, "orc", &err) == cli::kExitOk, err);
  const Json o = io::read_json(d.dir / "orc" / "oracle.json");
  CHECK(o.at("K") == 4);
  CHECK(o.at("periods") == 7);
}

#pragma once

// Batch commands behind the command-line tool. Each reads a JSON config and
// writes its outputs atomically into an output directory.
//
// Analysis config (fit-propensity, estimate):
//   {
//     "T": 300,                                   optional; default from event files
//     "treatments": "w.csv", "outcomes": "y.csv", point CSVs (t,x,y)
//     "covariates": [                             first raster fixes the grid
//       {"name": "intercept"},
//       {"name": "x1", "raster": "x1.csv"},             time-invariant
//       {"name": "x3", "raster_pattern": "x3_{t}.csv"}, one file per period
//       {"name": "w_prev", "smoothed": "treatments", "lag": 1, "decay": 2}
//     ],
//     "pixels": {"nx": 16, "ny": 16},
//     "moderators": [{"name": "aid", "file": "aid.csv", "kind": "binary",
//                     "basis": {"kind": "binary"}}],
//     "intervention": {"phi": "kde" | {"raster": "phi.csv"}, "c": [3, 7], "M": [1, 3]},
//     "propensity": {"model": "model.json"},      optional; fitted inline otherwise
//     "weighting": "hajek", "truncation_q": 1.0, "q_mode": "stabilized",
//     "level": 0.95, "r_grid": [0, 1], "district_scale": 1.0,
//     "rank_policy": "error" | "minimum_norm", "train_fraction": 0.8,
//     "master_seed": 1
//   }
// Relative paths resolve against the config file's directory.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "stcate/propensity.hpp"
#include "stcate/spatial.hpp"

namespace stcate::cli {

struct CommandOptions {
  std::filesystem::path config;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool paper_scale = false;
};

/// Events, covariates and pixels of an external (or exported) dataset.
struct AnalysisData {
  int T = 0;
  std::vector<PointPattern> treatments;
  std::vector<PointPattern> outcomes;
  std::shared_ptr<const CovariateStack> covariates;
  std::optional<PixelGrid> pixels;
};

AnalysisData load_analysis_data(const nlohmann::json& config, const std::filesystem::path& base_dir);

void cmd_fit_propensity(const CommandOptions& options);
void cmd_estimate(const CommandOptions& options);
void cmd_simulate(const CommandOptions& options);
void cmd_oracle(const CommandOptions& options);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitOverlap = 4;

/// Runs a command by name and maps failures to exit codes, reporting to `err`.
int run_command(const std::string& name, const CommandOptions& options, std::ostream& err);

}  // namespace stcate::cli

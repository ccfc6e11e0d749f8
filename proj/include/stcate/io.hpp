#pragma once

// File formats: CSV for rasters, point patterns, moderators and panels; JSON
// for configurations, fitted models and results. Writers are atomic (temp
// file plus rename).
//
// Raster CSV:
//   nx,ny,x_min,x_max,y_min,y_max     header
//   <nx>,<ny>,<x_min>,...             values
//   ny rows of nx cell values, first row at the lowest y.
// Point CSV:      header t,x,y; one event per line.
// Moderator CSV:  header pixel,value (time-invariant) or pixel,t,value.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "stcate/basis.hpp"
#include "stcate/cate.hpp"
#include "stcate/inference.hpp"
#include "stcate/propensity.hpp"
#include "stcate/spatial.hpp"
#include "stcate/weights.hpp"

namespace stcate::io {

using Json = nlohmann::json;

/// Writes `content` to a sibling temp file and renames it over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

Raster read_raster_csv(const std::filesystem::path& path);
std::string raster_to_csv(const Raster& raster);
void write_raster_csv(const std::filesystem::path& path, const Raster& raster);

/// Events grouped by period 1..T. T defaults to the largest period present.
std::vector<PointPattern> read_points_csv(const std::filesystem::path& path, int T = -1);
std::string points_to_csv(const std::vector<PointPattern>& patterns);
void write_points_csv(const std::filesystem::path& path, const std::vector<PointPattern>& patterns);

ModeratorPanel read_moderator_csv(const std::filesystem::path& path, const PixelGrid& grid, ModeratorKind kind);
std::string moderator_to_csv(const ModeratorPanel& moderator);

/// pixel,t,value rows.
std::string panel_to_csv(const PseudoOutcomePanel& panel);
/// t,log_weight,weight rows.
std::string weights_to_csv(const WeightSeries& series);

Json to_json(const Window& window);
Window window_from_json(const Json& j);
Json to_json(const GridShape& shape);
GridShape grid_from_json(const Json& j);

/// {"kind": "binary"} or {"kind": "natural_spline" | "spline_zero_indicator",
///  "L": <spline dimension>, "lo": .., "hi": .., "intercept": true}.
Json to_json(const BasisSpec& basis);
BasisSpec basis_from_json(const Json& j);

Json to_json(const FitReport& report, const std::vector<std::string>& names);
Json to_json(const CateFit& fit);
Json to_json(const VarianceBound& bound);
Json to_json(const HeterogeneityTest& test);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const Json& j);

std::string to_string(WeightingMode mode);
WeightingMode weighting_mode_from_string(const std::string& s);
std::string to_string(QMode mode);
QMode q_mode_from_string(const std::string& s);

}  // namespace stcate::io

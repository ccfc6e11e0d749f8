#include "stcate/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "stcate/error.hpp"

namespace stcate::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw InvalidArgument(where + ": cannot parse number '" + s + "'");
  }
  return v;
}

long parse_int(const std::string& s, const std::string& where) {
  long v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw InvalidArgument(where + ": cannot parse integer '" + s + "'");
  }
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Non-empty lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> lines_of(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!trim(line).empty()) out.emplace_back(n, line);
  }
  return out;
}

std::string where(const std::filesystem::path& path, int line) {
  return path.string() + ":" + std::to_string(line);
}

void expect_header(const std::vector<std::string>& got, const std::vector<std::string>& want,
                   const std::filesystem::path& path) {
  if (got != want) {
    std::string w;
    for (const auto& s : want) w += (w.empty() ? "" : ",") + s;
    throw InvalidArgument(path.string() + ": expected header '" + w + "'");
  }
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(path.string() + ": invalid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) { atomic_write(path, j.dump(2) + "\n"); }

Raster read_raster_csv(const std::filesystem::path& path) {
  const auto lines = lines_of(path);
  if (lines.size() < 2) throw InvalidArgument(path.string() + ": raster file needs a header and a shape line");
  expect_header(split(lines[0].second), {"nx", "ny", "x_min", "x_max", "y_min", "y_max"}, path);
  const auto meta = split(lines[1].second);
  const std::string w = where(path, lines[1].first);
  if (meta.size() != 6) throw InvalidArgument(w + ": expected 6 shape fields");
  const long nx = parse_int(meta[0], w);
  const long ny = parse_int(meta[1], w);
  if (nx < 1 || ny < 1) throw InvalidArgument(w + ": raster dimensions must be positive");
  const GridShape shape(Window(parse_double(meta[2], w), parse_double(meta[3], w), parse_double(meta[4], w),
                               parse_double(meta[5], w)),
                        static_cast<int>(nx), static_cast<int>(ny));
  if (lines.size() != static_cast<std::size_t>(ny) + 2) {
    throw InvalidArgument(path.string() + ": expected " + std::to_string(ny) + " raster rows");
  }
  std::vector<double> values;
  values.reserve(shape.size());
  for (long iy = 0; iy < ny; ++iy) {
    const auto& [num, text] = lines[static_cast<std::size_t>(iy) + 2];
    const auto row = split(text);
    if (static_cast<long>(row.size()) != nx) throw InvalidArgument(where(path, num) + ": expected " + std::to_string(nx) + " values");
    for (const auto& cell : row) {
      const double v = parse_double(cell, where(path, num));
      if (!std::isfinite(v)) throw InvalidArgument(where(path, num) + ": non-finite raster value");
      values.push_back(v);
    }
  }
  return Raster(shape, std::move(values));
}

std::string raster_to_csv(const Raster& raster) {
  const GridShape& s = raster.shape();
  const Window& w = s.window();
  std::ostringstream out;
  out << "nx,ny,x_min,x_max,y_min,y_max\n"
      << s.nx() << ',' << s.ny() << ',' << fmt(w.x_min()) << ',' << fmt(w.x_max()) << ',' << fmt(w.y_min()) << ','
      << fmt(w.y_max()) << '\n';
  for (int iy = 0; iy < s.ny(); ++iy) {
    for (int ix = 0; ix < s.nx(); ++ix) {
      if (ix) out << ',';
      out << fmt(raster[static_cast<std::size_t>(iy) * s.nx() + ix]);
    }
    out << '\n';
  }
  return out.str();
}

void write_raster_csv(const std::filesystem::path& path, const Raster& raster) {
  atomic_write(path, raster_to_csv(raster));
}

std::vector<PointPattern> read_points_csv(const std::filesystem::path& path, int T) {
  const auto lines = lines_of(path);
  if (lines.empty()) throw InvalidArgument(path.string() + ": missing header t,x,y");
  expect_header(split(lines[0].second), {"t", "x", "y"}, path);
  std::vector<std::pair<long, Location>> events;
  long t_max = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string w = where(path, lines[i].first);
    const auto f = split(lines[i].second);
    if (f.size() != 3) throw InvalidArgument(w + ": expected t,x,y");
    const long t = parse_int(f[0], w);
    if (t < 1) throw InvalidArgument(w + ": periods are 1-based");
    const Location loc{parse_double(f[1], w), parse_double(f[2], w)};
    if (!std::isfinite(loc.x) || !std::isfinite(loc.y)) throw InvalidArgument(w + ": non-finite coordinate");
    t_max = std::max(t_max, t);
    events.emplace_back(t, loc);
  }
  if (T < 0) T = static_cast<int>(t_max);
  if (t_max > T) throw InvalidArgument(path.string() + ": event period exceeds T = " + std::to_string(T));
  std::vector<PointPattern> out(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) out[t - 1].t = t;
  for (const auto& [t, loc] : events) out[static_cast<std::size_t>(t) - 1].points.push_back(loc);
  return out;
}

std::string points_to_csv(const std::vector<PointPattern>& patterns) {
  std::ostringstream out;
  out << "t,x,y\n";
  for (const PointPattern& p : patterns) {
    for (const Location& loc : p.points) out << p.t << ',' << fmt(loc.x) << ',' << fmt(loc.y) << '\n';
  }
  return out.str();
}

void write_points_csv(const std::filesystem::path& path, const std::vector<PointPattern>& patterns) {
  atomic_write(path, points_to_csv(patterns));
}

ModeratorPanel read_moderator_csv(const std::filesystem::path& path, const PixelGrid& grid, ModeratorKind kind) {
  const auto lines = lines_of(path);
  if (lines.empty()) throw InvalidArgument(path.string() + ": missing moderator header");
  const auto header = split(lines[0].second);
  const bool temporal = header.size() == 3;
  if (temporal) {
    expect_header(header, {"pixel", "t", "value"}, path);
  } else {
    expect_header(header, {"pixel", "value"}, path);
  }
  const auto p = static_cast<long>(grid.pixel_count());
  std::map<std::pair<long, long>, double> entries;
  long t_max = 1;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string w = where(path, lines[i].first);
    const auto f = split(lines[i].second);
    if (f.size() != header.size()) throw InvalidArgument(w + ": wrong number of fields");
    const long pixel = parse_int(f[0], w);
    if (pixel < 0 || pixel >= p) throw InvalidArgument(w + ": pixel index out of range");
    const long t = temporal ? parse_int(f[1], w) : 1;
    if (t < 1) throw InvalidArgument(w + ": periods are 1-based");
    const double v = parse_double(f.back(), w);
    if (!std::isfinite(v)) throw InvalidArgument(w + ": non-finite moderator value");
    if (!entries.emplace(std::make_pair(pixel, t), v).second) throw InvalidArgument(w + ": duplicate entry");
    t_max = std::max(t_max, t);
  }
  if (static_cast<long>(entries.size()) != p * t_max) {
    throw InvalidArgument(path.string() + ": moderator table must cover every pixel and period");
  }
  Eigen::MatrixXd values(p, temporal ? t_max : 1);
  for (const auto& [key, v] : entries) values(key.first, key.second - 1) = v;
  return ModeratorPanel(grid, std::move(values), kind);
}

std::string moderator_to_csv(const ModeratorPanel& moderator) {
  std::ostringstream out;
  const Eigen::MatrixXd& v = moderator.values();
  if (moderator.time_invariant()) {
    out << "pixel,value\n";
    for (Eigen::Index i = 0; i < v.rows(); ++i) out << i << ',' << fmt(v(i, 0)) << '\n';
  } else {
    out << "pixel,t,value\n";
    for (Eigen::Index t = 0; t < v.cols(); ++t) {
      for (Eigen::Index i = 0; i < v.rows(); ++i) out << i << ',' << t + 1 << ',' << fmt(v(i, t)) << '\n';
    }
  }
  return out.str();
}

std::string panel_to_csv(const PseudoOutcomePanel& panel) {
  std::ostringstream out;
  out << "pixel,t,value\n";
  for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
      out << i << ',' << panel.first_t + j << ',' << fmt(panel.values(i, j)) << '\n';
    }
  }
  return out.str();
}

std::string weights_to_csv(const WeightSeries& series) {
  std::ostringstream out;
  out << "t,log_weight,weight\n";
  for (int t = series.first_t(); t <= series.last_t(); ++t) {
    const double w = series.weight(t);
    out << t << ',' << fmt(std::log(w)) << ',' << fmt(w) << '\n';
  }
  return out.str();
}

Json to_json(const Window& w) { return {{"x_min", w.x_min()}, {"x_max", w.x_max()}, {"y_min", w.y_min()}, {"y_max", w.y_max()}}; }

Window window_from_json(const Json& j) {
  try {
    return Window(j.at("x_min").get<double>(), j.at("x_max").get<double>(), j.at("y_min").get<double>(),
                  j.at("y_max").get<double>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad window: ") + e.what());
  }
}

Json to_json(const GridShape& s) { return {{"window", to_json(s.window())}, {"nx", s.nx()}, {"ny", s.ny()}}; }

GridShape grid_from_json(const Json& j) {
  try {
    return GridShape(window_from_json(j.at("window")), j.at("nx").get<int>(), j.at("ny").get<int>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad grid: ") + e.what());
  }
}

Json to_json(const BasisSpec& basis) {
  Json j;
  j["intercept"] = basis.include_intercept();
  switch (basis.kind()) {
    case BasisKind::kBinary:
      j["kind"] = "binary";
      break;
    case BasisKind::kNaturalSpline:
    case BasisKind::kSplineZeroIndicator:
      j["kind"] = basis.kind() == BasisKind::kNaturalSpline ? "natural_spline" : "spline_zero_indicator";
      j["L"] = static_cast<int>(basis.knots().size()) - 1;
      j["lo"] = basis.knots().front();
      j["hi"] = basis.knots().back();
      break;
    case BasisKind::kCustom:
      j["kind"] = "custom";
      break;
  }
  j["columns"] = basis.column_names();
  return j;
}

BasisSpec basis_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const bool icpt = j.value("intercept", true);
    if (kind == "binary") return BasisSpec::binary();
    if (kind == "natural_spline") {
      return BasisSpec::natural_spline(j.at("L").get<int>(), j.at("lo").get<double>(), j.at("hi").get<double>(), icpt);
    }
    if (kind == "spline_zero_indicator") {
      return BasisSpec::spline_zero_indicator(j.at("L").get<int>(), j.at("lo").get<double>(),
                                              j.at("hi").get<double>(), icpt);
    }
    throw InvalidArgument("unknown basis kind: " + kind);
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("bad basis specification: ") + e.what());
  }
}

Json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd row = m.row(i).transpose();
    rows.push_back(to_json(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  try {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("expected a numeric array: ") + e.what());
  }
}

Json to_json(const FitReport& r, const std::vector<std::string>& names) {
  return {{"covariates", names},
          {"gamma", to_json(r.gamma_hat)},
          {"log_likelihood", r.log_likelihood},
          {"gradient_norm", r.gradient_norm},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"observed_information", to_json(r.observed_information)},
          {"t_begin", r.t_begin},
          {"t_end", r.t_end}};
}

std::string to_string(WeightingMode mode) { return mode == WeightingMode::kIpw ? "ipw" : "hajek"; }

WeightingMode weighting_mode_from_string(const std::string& s) {
  if (s == "ipw") return WeightingMode::kIpw;
  if (s == "hajek") return WeightingMode::kHajek;
  throw InvalidArgument("unknown weighting mode: " + s);
}

std::string to_string(QMode mode) { return mode == QMode::kIdentity ? "identity" : "stabilized"; }

QMode q_mode_from_string(const std::string& s) {
  if (s == "identity") return QMode::kIdentity;
  if (s == "stabilized") return QMode::kAppendixD;
  throw InvalidArgument("unknown Q mode: " + s);
}

Json to_json(const CateFit& fit) {
  Json periods = Json::array();
  for (const TimeFit& f : fit.periods) {
    periods.push_back({{"t", f.t}, {"beta", to_json(f.beta)}, {"condition", f.condition}, {"minimum_norm", f.minimum_norm}});
  }
  return {{"beta_bar", to_json(fit.beta_bar)},
          {"basis", to_json(fit.basis)},
          {"M", fit.M},
          {"mode", to_string(fit.mode)},
          {"h_prime", fit.hp_id},
          {"h_double_prime", fit.hpp_id},
          {"district_scale", fit.district_scale},
          {"support", {fit.support_lo, fit.support_hi}},
          {"n_eff", fit.n_eff()},
          {"periods", periods}};
}

Json to_json(const VarianceBound& b) {
  Json j{{"Sigma", to_json(b.Sigma_hat)}, {"n_eff", b.n_eff}};
  if (b.V_hat.size() > 0) {
    j["V"] = to_json(b.V_hat);
    j["J"] = to_json(b.J_hat);
    j["Q"] = to_json(b.Q);
    j["q_mode"] = to_string(b.q_mode);
  }
  return j;
}

Json to_json(const HeterogeneityTest& t) { return {{"T_c", t.T_c}, {"dof", t.dof}, {"p_value", t.p_value}}; }

}  // namespace stcate::io

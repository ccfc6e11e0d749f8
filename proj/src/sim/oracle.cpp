#include "stcate/sim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "stcate/cate.hpp"
#include "stcate/error.hpp"

namespace stcate::sim {

namespace {

using StaticFn = std::function<std::span<const double>(int)>;

struct CellCenters {
  std::vector<double> x, y;
  explicit CellCenters(const GridShape& shape) : x(shape.size()), y(shape.size()) {
    for (std::size_t c = 0; c < shape.size(); ++c) {
      const Location loc = shape.cell_center(c);
      x[c] = loc.x;
      y[c] = loc.y;
    }
  }
};

void fill_distance(std::span<const Location> points, const CellCenters& centers, Raster& out) {
  const auto n = static_cast<Eigen::Index>(out.size());
  Eigen::Map<Eigen::ArrayXd> v(out.values().data(), n);
  if (points.empty()) {
    v.setConstant(std::numeric_limits<double>::infinity());
    return;
  }
  const Eigen::Map<const Eigen::ArrayXd> cx(centers.x.data(), n);
  const Eigen::Map<const Eigen::ArrayXd> cy(centers.y.data(), n);
  v = (cx - points[0].x).square() + (cy - points[0].y).square();
  for (std::size_t k = 1; k < points.size(); ++k) {
    v = v.min((cx - points[k].x).square() + (cy - points[k].y).square());
  }
  v = v.sqrt();
}

// Rolls the outcome process forward over t-M+1..t given counterfactual
// treatment distance rasters (oldest first) and returns expected pixel counts.
Eigen::VectorXd rollout(const SimPanel& panel, int t, const std::vector<Raster>& cf_dist, const StaticFn& static_part,
                        Engine& rng, std::vector<double>& log_lambda) {
  const int M = static_cast<int>(cf_dist.size());
  const int first = t - M + 1;
  const GridShape& shape = panel.raster;
  const double cell_area = shape.cell_area();
  const Raster* y_prev = first >= 2 ? &panel.y_distance[first - 2] : nullptr;
  std::optional<Raster> y_local;
  for (int s = first; s <= t; ++s) {
    if (s < t && panel.config.gamma_y == 0.0) continue;
    std::array<const Raster*, 4> w_dist{};
    for (int j = 0; j < 4; ++j) {
      const int p = s - j;
      if (p >= first) {
        w_dist[j] = &cf_dist[p - first];
      } else if (p >= 1) {
        w_dist[j] = &panel.w_distance[p - 1];
      }
    }
    outcome_log_intensity(panel, s, static_part(s), w_dist, y_prev, log_lambda);
    if (s < t) {
      Raster intensity(shape);
      for (std::size_t c = 0; c < intensity.size(); ++c) {
        intensity[c] = std::exp(std::min(log_lambda[c], kExponentClamp));
      }
      const PointPattern y = PoissonSampler(IntensitySurface(std::move(intensity))).sample(s, rng);
      y_local = distance_raster(y.points, shape);
      y_prev = &*y_local;
    }
  }
  Eigen::Map<Eigen::ArrayXd> rate(log_lambda.data(), static_cast<Eigen::Index>(log_lambda.size()));
  rate = rate.min(kExponentClamp).exp() * cell_area;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(panel.pixels.pixel_count()));
  for (std::size_t c = 0; c < log_lambda.size(); ++c) counts[panel.cell_pixel[c]] += log_lambda[c];
  return counts;
}

}  // namespace

double OracleResult::tau(const BasisSpec& basis, double r) const { return basis.evaluate(r).dot(beta); }

double OracleResult::tau_se(const BasisSpec& basis, double r) const {
  if (K < 2) return 0.0;
  const Eigen::VectorXd z = basis.evaluate(r);
  const Eigen::VectorXd v = draws * z;
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (K - 1);
  return std::sqrt(var / K);
}

Eigen::VectorXd counterfactual_expected_counts(const SimPanel& panel, int t, const std::vector<PointPattern>& cf,
                                               Engine& rng) {
  const int M = static_cast<int>(cf.size());
  if (M < 1 || t < M || t > panel.T()) throw InvalidArgument("counterfactual window out of range");
  std::vector<Raster> dist;
  for (const PointPattern& w : cf) dist.push_back(distance_raster(w.points, panel.raster));
  std::vector<double> cache;
  const StaticFn static_part = [&](int s) {
    cache = panel.outcome_static_part(s);
    return std::span<const double>(cache);
  };
  std::vector<double> log_lambda;
  return rollout(panel, t, dist, static_part, rng, log_lambda);
}

OracleResult compute_oracle(const SimPanel& panel, const IntensitySurface& phi, double c_hp, double c_hpp, int M,
                            const BasisSpec& basis, const SeedStream& stream, const OracleOptions& options) {
  if (!(phi.shape() == panel.raster)) throw InvalidArgument("phi must live on the simulation raster");
  if (M < 1 || M > panel.T()) throw InvalidArgument("M must lie in 1..T");
  if (!(c_hp > 0.0) || !(c_hpp > 0.0)) throw InvalidArgument("intervention scales must be positive");
  if (options.K < 1) throw InvalidArgument("oracle needs at least one draw");

  const int T = panel.T();
  const double c_max = std::max(c_hp, c_hpp);
  const PoissonSampler sampler(phi.scaled(c_max));
  const double keep_hp = c_hp / c_max;
  const double keep_hpp = c_hpp / c_max;
  const CellCenters centers(panel.raster);
  const bool stochastic_rollout = M > 1 && panel.config.gamma_y != 0.0;
  // Without outcome feedback only the last `lookback` periods reach Y_t.
  const int first_needed = stochastic_rollout ? 0 : std::max(0, M - panel.config.lookback);

  std::vector<std::vector<double>> statics(static_cast<std::size_t>(T));
  for (int s = 1; s <= T; ++s) statics[s - 1] = panel.outcome_static_part(s);
  const StaticFn static_part = [&](int s) { return std::span<const double>(statics[s - 1]); };

  OracleResult out;
  out.K = options.K;
  out.periods = T - M + 1;
  out.draws = Eigen::MatrixXd::Zero(options.K, basis.columns());

  std::optional<LeastSquaresProjector> shared;
  std::vector<Raster> dist_hp(static_cast<std::size_t>(M), Raster(panel.raster));
  std::vector<Raster> dist_hpp(static_cast<std::size_t>(M), Raster(panel.raster));
  std::vector<Location> pts_hp, pts_hpp;
  std::vector<double> log_lambda;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int t = M; t <= T; ++t) {
    std::optional<LeastSquaresProjector> local;
    const Eigen::MatrixXd Z = build_basis_matrix(panel.moderator, t, M, basis);
    if (panel.moderator.time_invariant()) {
      if (!shared) shared.emplace(Z);
    } else {
      local.emplace(Z);
    }
    const LeastSquaresProjector& proj = panel.moderator.time_invariant() ? *shared : *local;
    const SeedStream period_stream = stream.child(static_cast<std::uint64_t>(t));
    Engine rng = period_stream.engine();

    for (int k = 0; k < options.K; ++k) {
      for (int s = 0; s < M; ++s) {
        const PointPattern w = sampler.sample(t - M + 1 + s, rng);
        pts_hp.clear();
        pts_hpp.clear();
        for (const Location& p : w.points) {
          const double u = unit(rng);
          if (u < keep_hp) pts_hp.push_back(p);
          if (u < keep_hpp) pts_hpp.push_back(p);
        }
        if (s < first_needed) continue;
        fill_distance(pts_hp, centers, dist_hp[s]);
        fill_distance(pts_hpp, centers, dist_hpp[s]);
      }
      Eigen::VectorXd e_hp, e_hpp;
      if (stochastic_rollout) {
        const SeedStream draw_stream = period_stream.child(static_cast<std::uint64_t>(k) + 1);
        Engine r1 = draw_stream.engine();
        e_hp = rollout(panel, t, dist_hp, static_part, r1, log_lambda);
        Engine r2 = draw_stream.engine();
        e_hpp = rollout(panel, t, dist_hpp, static_part, r2, log_lambda);
      } else {
        e_hp = rollout(panel, t, dist_hp, static_part, rng, log_lambda);
        e_hpp = rollout(panel, t, dist_hpp, static_part, rng, log_lambda);
      }
      out.draws.row(k) += proj.apply(e_hpp - e_hp).transpose();
    }
  }
  out.draws /= static_cast<double>(out.periods);
  out.beta = out.draws.colwise().mean().transpose();
  out.beta_se = Eigen::VectorXd::Zero(out.beta.size());
  if (options.K > 1) {
    const Eigen::MatrixXd centered = out.draws.rowwise() - out.beta.transpose();
    out.beta_se = (centered.colwise().squaredNorm().transpose() / (options.K - 1) / options.K).cwiseSqrt();
  }
  return out;
}

}  // namespace stcate::sim

#include "fibrescan/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fibrescan/error.hpp"
#include "fibrescan/parallel.hpp"
#include "fibrescan/point_index.hpp"

namespace fibrescan {

namespace {

std::vector<Vec3> marks_in(const FibreSystem& system, const Cube& cube) {
  std::vector<Vec3> marks;
  for (const auto& p : system.points()) {
    if (cube.contains(p.location)) marks.push_back(p.mark.vec());
  }
  return marks;
}

std::vector<MarkedPoint> points_in(const FibreSystem& system, const Cube& cube) {
  std::vector<MarkedPoint> out;
  for (const auto& p : system.points()) {
    if (cube.contains(p.location)) out.push_back(p);
  }
  return out;
}

double clamped_log(double f, std::size_t& clamped) noexcept {
  if (!(f >= kLogClamp)) {
    ++clamped;
    return std::log(kLogClamp);
  }
  return std::log(f);
}

/// Density values f_hat(xi_i) for the scored points, computed in parallel and
/// stored by position.
std::vector<double> score_densities(const FibreSystem& source,
                                    std::span<const MarkedPoint> scored,
                                    const EstimatorConfig& cfg, bool& gridded) {
  const SphericalKernel kernel(cfg.kernel, cfg.bandwidth);
  std::vector<double> values(scored.size(), 0.0);
  gridded = false;

  if (!cfg.sub_window) {
    const auto marks = marks_in(source, cfg.window);
    const double normalizer = cfg.intensity * cfg.window.volume();
    const double resolution = cfg.bandwidth * cfg.grid_resolution_factor;
    gridded = cfg.evaluation == DensityEvaluation::Gridded ||
              (cfg.evaluation == DensityEvaluation::Automatic &&
               scored.size() > 2 * GriddedDensity::node_count_for(resolution));
    if (gridded) {
      const GriddedDensity grid(marks, kernel, normalizer, resolution, cfg.threads);
      for (std::size_t i = 0; i < scored.size(); ++i) values[i] = grid(scored[i].mark);
    } else {
      const KernelDensity density(marks, kernel, normalizer);
      parallel_for(
          scored.size(), cfg.threads,
          [&](std::size_t i) { values[i] = density(scored[i].mark); }, 256);
    }
    return values;
  }

  const Cube& sub = *cfg.sub_window;
  const Cube support = cfg.support_region();
  const Box support_box = to_box(support);
  std::vector<Vec3> locations;
  std::vector<Vec3> marks;
  for (const auto& p : source.points()) {
    if (support.contains(p.location)) {
      locations.push_back(p.location);
      marks.push_back(p.mark.vec());
    }
  }
  const PointGrid grid(locations, support_box, std::max(sub.side(), 1e-9) / 2.0);
  parallel_for(
      scored.size(), cfg.threads,
      [&](std::size_t i) {
        const Box local = intersect(to_box(sub.translated(scored[i].location)), support_box);
        const double volume = local.volume();
        if (!(volume > 0.0)) return;
        const Vec3& eta = scored[i].mark.vec();
        double sum = 0.0;
        grid.for_each_in(local, [&](std::size_t j) { sum += kernel.weight(eta, marks[j]); });
        values[i] = sum / (cfg.intensity * volume);
      },
      64);
  return values;
}

EntropyEstimate entropy_sum(const FibreSystem& source, const FibreSystem& scored_system,
                            const EstimatorConfig& cfg) {
  cfg.validate();
  const auto scored = points_in(scored_system, cfg.window);
  if (scored.empty()) throw NumericalError("entropy: the window contains no points");
  EntropyEstimate result;
  const auto values = score_densities(source, scored, cfg, result.gridded);
  double sum = 0.0;
  for (const double f : values) sum += clamped_log(f, result.clamped);
  result.terms = scored.size();
  result.value = -sum / (cfg.intensity * cfg.window.volume());
  result.unreliable = static_cast<double>(result.clamped) > 0.01 * static_cast<double>(result.terms);
  return result;
}

/// E[-log(N / mu) | N >= 1] for N ~ Poisson(mu), by direct summation of the
/// probability mass function over all non-negligible counts.
double conditional_neg_log_count(double mu) {
  const double spread = 12.0 * std::sqrt(mu) + 20.0;
  const auto lo = static_cast<std::uint64_t>(std::max(1.0, std::floor(mu - spread)));
  const auto hi = static_cast<std::uint64_t>(std::ceil(mu + spread));
  double mass = 0.0;
  double value = 0.0;
  for (std::uint64_t n = lo; n <= hi; ++n) {
    const double dn = static_cast<double>(n);
    const double pmf = std::exp(dn * std::log(mu) - mu - std::lgamma(dn + 1.0));
    mass += pmf;
    value += pmf * -std::log(dn / mu);
  }
  if (!(mass > 0.0)) throw NumericalError("count expectation underflowed");
  // Dividing by the summed mass conditions on N >= 1; the truncated tails
  // are negligible.
  return value / mass;
}

struct Replicate {
  std::size_t count{0};
  double reference_g{0.0};       // -mean log f_hat over the reference marks
  double reference_shape{0.0};   // reference_g + log(N / (lambda v))
  double log_sum{0.0};
  double log_sum_sq{0.0};
  std::vector<double> node_g;
};

}  // namespace

void EstimatorConfig::validate() const {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw ConfigError("estimator: intensity must be positive");
  }
  if (!(bandwidth > 0.0 && bandwidth < kPi)) {
    throw ConfigError("estimator: bandwidth must lie in (0, pi)");
  }
  if (!(window.side() > 0.0)) throw ConfigError("estimator: window must have positive side");
  if (sub_window) {
    if (!(sub_window->side() > 0.0)) {
      throw ConfigError("estimator: sub-window must have positive side");
    }
    if (sub_window->side() > window.side()) {
      throw ConfigError("estimator: sub-window larger than the window");
    }
  }
  if (support && !(support->side() > 0.0)) {
    throw ConfigError("estimator: support region must have positive side");
  }
  if (!(grid_resolution_factor > 0.0)) {
    throw ConfigError("estimator: grid resolution factor must be positive");
  }
}

KernelDensity window_density(const FibreSystem& system, const EstimatorConfig& cfg) {
  cfg.validate();
  return KernelDensity(marks_in(system, cfg.window), SphericalKernel(cfg.kernel, cfg.bandwidth),
                       cfg.intensity * cfg.window.volume());
}

double density_estimate(const FibreSystem& system, const EstimatorConfig& cfg,
                        const UnitVector3& eta) {
  return window_density(system, cfg)(eta);
}

double density_sup_error(std::span<const double> estimate, const DirectionalModel& truth,
                         const SphereGrid& grid) {
  if (estimate.size() != grid.size()) {
    throw ConfigError("density_sup_error: estimate size does not match the grid");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    worst = std::max(worst, std::abs(estimate[i] - truth.density(grid.nodes()[i])));
  }
  return worst;
}

double density_sup_error(const FibreSystem& system, const EstimatorConfig& cfg,
                         const DirectionalModel& truth, const SphereGrid& grid) {
  const KernelDensity density = window_density(system, cfg);
  std::vector<double> values(grid.size());
  parallel_for(
      grid.size(), cfg.threads, [&](std::size_t i) { values[i] = density(grid.nodes()[i]); },
      64);
  return density_sup_error(values, truth, grid);
}

EntropyEstimate entropy_plain(const FibreSystem& system, const EstimatorConfig& cfg) {
  return entropy_sum(system, system, cfg);
}

EntropyEstimate entropy_modified(const FibreSystem& original, const FibreSystem& copy,
                                 const EstimatorConfig& cfg) {
  EntropyEstimate result = entropy_sum(original, copy, cfg);
  result.degenerate_copy = original.points().size() == copy.points().size() &&
                           std::equal(original.points().begin(), original.points().end(),
                                      copy.points().begin());
  return result;
}

double CltNormalization::sigma() const {
  if (!(variance > 0.0)) throw NumericalError("CLT normalization: variance is not positive");
  return std::sqrt(variance);
}

double CltNormalization::centering(std::size_t copy_count, double intensity,
                                   double window_volume) const noexcept {
  return static_cast<double>(copy_count) / (intensity * window_volume) * mean_neg_log_density;
}

CltNormalization clt_normalize(const EstimatorConfig& cfg, const DirectionalModel& model,
                               const CltRecipe& recipe, const RandomStream& rng) {
  cfg.validate();
  if (!cfg.sub_window) throw ConfigError("clt_normalize: a sub-window is required");
  if (recipe.replications < 2) throw ConfigError("clt_normalize: need at least 2 replications");
  if (recipe.marks_per_realization == 0 || recipe.marks_per_node == 0) {
    throw ConfigError("clt_normalize: mark counts must be positive");
  }
  const auto per_axis =
      static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(recipe.covariance_nodes))));
  if (per_axis == 0 || per_axis * per_axis * per_axis != recipe.covariance_nodes) {
    throw ConfigError("clt_normalize: covariance node count must be a perfect cube");
  }

  const double m = cfg.sub_window->side();
  const double v = cfg.sub_window->volume();
  const double lambda = cfg.intensity;
  const SphericalKernel kernel(cfg.kernel, cfg.bandwidth);
  const Vec3 origin = cfg.window.origin() + cfg.sub_window->origin();
  const Cube region(origin, 2.0 * m);
  const std::size_t nodes = recipe.covariance_nodes;

  auto window_marks = [](std::span<const Vec3> marks, const PointGrid& grid, const Cube& cube) {
    std::vector<Vec3> out;
    grid.for_each_in(to_box(cube), [&](std::size_t j) { out.push_back(marks[j]); });
    return out;
  };

  std::vector<Replicate> reps(recipe.replications);
  parallel_for(recipe.replications, cfg.threads, [&](std::size_t r) {
    const RandomStream stream = rng.split(r);
    SimulationOptions options;
    options.threads = 1;
    const FibreSystem system =
        simulate_homogeneous(region, lambda, model, stream.split("process"), options);
    std::vector<Vec3> locations;
    std::vector<Vec3> marks;
    locations.reserve(system.size());
    marks.reserve(system.size());
    for (const auto& p : system.points()) {
      locations.push_back(p.location);
      marks.push_back(p.mark.vec());
    }
    const PointGrid grid(locations, to_box(region), m / 4.0);
    Replicate& rep = reps[r];

    const auto reference = window_marks(marks, grid, Cube(origin, m));
    rep.count = reference.size();
    {
      const KernelDensity density(reference, kernel, lambda * v);
      RandomStream mark_stream = stream.split("reference");
      std::size_t clamped = 0;
      for (std::size_t k = 0; k < recipe.marks_per_realization; ++k) {
        const double l = clamped_log(density(model.sample(mark_stream)), clamped);
        rep.log_sum += l;
        rep.log_sum_sq += l * l;
      }
      rep.reference_g = -rep.log_sum / static_cast<double>(recipe.marks_per_realization);
      if (rep.count > 0) {
        rep.reference_shape =
            rep.reference_g + std::log(static_cast<double>(rep.count) / (lambda * v));
      }
    }

    rep.node_g.resize(nodes);
    const RandomStream node_streams = stream.split("nodes");
    const double step = m / static_cast<double>(per_axis);
    for (std::size_t j = 0; j < nodes; ++j) {
      const std::size_t a = j / (per_axis * per_axis);
      const std::size_t b = (j / per_axis) % per_axis;
      const std::size_t c = j % per_axis;
      const Vec3 shift{(static_cast<double>(a) + 0.5) * step, (static_cast<double>(b) + 0.5) * step,
                       (static_cast<double>(c) + 0.5) * step};
      const auto local = window_marks(marks, grid, Cube(origin + shift, m));
      const KernelDensity density(local, kernel, lambda * v);
      RandomStream mark_stream = node_streams.split(j);
      std::size_t clamped = 0;
      double sum = 0.0;
      for (std::size_t k = 0; k < recipe.marks_per_node; ++k) {
        sum += clamped_log(density(model.sample(mark_stream)), clamped);
      }
      rep.node_g[j] = -sum / static_cast<double>(recipe.marks_per_node);
    }
  });

  const auto R = static_cast<double>(recipe.replications);
  CltNormalization out;
  out.replications = recipe.replications;
  out.covariance_nodes = nodes;

  // Pooled variance of log f_hat over all reference marks.
  double total = 0.0;
  double total_sq = 0.0;
  for (const auto& rep : reps) {
    total += rep.log_sum;
    total_sq += rep.log_sum_sq;
  }
  const double n_marks = R * static_cast<double>(recipe.marks_per_realization);
  out.log_density_variance = (total_sq - total * total / n_marks) / (n_marks - 1.0);

  if (recipe.count_decomposition) {
    const double mu = lambda * v;
    const double p0 = std::exp(-mu);
    double shape_sum = 0.0;
    std::size_t occupied = 0;
    for (const auto& rep : reps) {
      if (rep.count > 0) {
        shape_sum += rep.reference_shape;
        ++occupied;
      }
    }
    if (occupied == 0) throw NumericalError("clt_normalize: every reference window was empty");
    const double shape_mean = shape_sum / static_cast<double>(occupied);
    out.mean_neg_log_density =
        (1.0 - p0) * (conditional_neg_log_count(mu) + shape_mean) + p0 * -std::log(kLogClamp);
  } else {
    double g = 0.0;
    for (const auto& rep : reps) g += rep.reference_g;
    out.mean_neg_log_density = g / R;
  }

  double g0_mean = 0.0;
  for (const auto& rep : reps) g0_mean += rep.reference_g;
  g0_mean /= R;
  double cov_sum = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    double gy_mean = 0.0;
    for (const auto& rep : reps) gy_mean += rep.node_g[j];
    gy_mean /= R;
    double c = 0.0;
    for (const auto& rep : reps) c += (rep.reference_g - g0_mean) * (rep.node_g[j] - gy_mean);
    cov_sum += c / (R - 1.0);
  }
  // Nodes cover B' = one octant of (-m, m)^3, outside which the windows are
  // disjoint; the covariance is symmetric under reflection of each axis.
  out.covariance_integral = 8.0 * v / static_cast<double>(nodes) * cov_sum;
  out.variance = out.log_density_variance / lambda + out.covariance_integral;
  if (!(out.variance > 0.0)) {
    throw NumericalError("clt_normalize: variance estimate is not positive; increase replications");
  }
  return out;
}

double standardized_statistic(double estimate, double centering, double sigma,
                              double window_volume) {
  return std::sqrt(window_volume) * (estimate - centering) / sigma;
}

}  // namespace fibrescan

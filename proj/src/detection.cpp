#include "fibrescan/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fibrescan/error.hpp"
#include "fibrescan/parallel.hpp"
#include "fibrescan/point_index.hpp"

namespace fibrescan {

namespace {

struct IndexedPoints {
  std::vector<Vec3> locations;
  std::vector<Vec3> marks;
};

IndexedPoints split(const FibreSystem& system) {
  IndexedPoints out;
  out.locations.reserve(system.size());
  out.marks.reserve(system.size());
  for (const auto& p : system.points()) {
    out.locations.push_back(p.location);
    out.marks.push_back(p.mark.vec());
  }
  return out;
}

void require_covers(const FibreSystem& system, const Cube& window) {
  if (!system.window().contains(window)) {
    throw ConfigError("scan: the observation window is not inside the data window");
  }
}

double log_term(double f, std::size_t& clamped) noexcept {
  if (!(f >= kLogClamp)) {
    ++clamped;
    return std::log(kLogClamp);
  }
  return std::log(f);
}

ScanField empty_field(const ScanConfig& cfg) {
  ScanField field{cfg.lattice(), cfg.scan_side, {}, {}, {}, {}};
  const std::size_t n = field.lattice.size();
  field.values.assign(n, std::numeric_limits<double>::quiet_NaN());
  field.counts.assign(n, 0);
  field.clamped.assign(n, 0);
  field.valid.assign(n, 0);
  return field;
}

}  // namespace

void ScanConfig::validate() const {
  if (!(window.side() > 0.0)) throw ConfigError("scan: observation window must have positive side");
  if (!(scan_side > 0.0) || !(scan_side < window.side())) {
    throw ConfigError("scan: scanning window side must lie in (0, side of W)");
  }
  if (mesh < 0.0) throw ConfigError("scan: mesh must be positive");
  if (!(multiplier > 0.0)) throw ConfigError("scan: multiplier must be positive");
  if (!(estimator.intensity > 0.0)) throw ConfigError("scan: intensity must be positive");
  if (estimator.bandwidth != 0.0 && !(estimator.bandwidth > 0.0 && estimator.bandwidth < kPi)) {
    throw ConfigError("scan: bandwidth must lie in (0, pi)");
  }
}

double ScanConfig::effective_bandwidth() const {
  return estimator.bandwidth > 0.0 ? estimator.bandwidth
                                   : default_bandwidth(scan_side * scan_side * scan_side);
}

Lattice ScanConfig::lattice() const {
  const auto eroded = erode(window, Cube(scan_side));
  if (!eroded) throw ConfigError("scan: W ⊖ B is empty");
  return Lattice(*eroded, effective_mesh());
}

std::size_t ScanField::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

ScanField scan_entropy_field(const FibreSystem& system, const ScanConfig& cfg) {
  cfg.validate();
  require_covers(system, cfg.window);
  ScanField field = empty_field(cfg);
  const IndexedPoints pts = split(system);
  const PointGrid grid(pts.locations, to_box(cfg.window), cfg.scan_side / 2.0);
  const SphericalKernel kernel(cfg.estimator.kernel, cfg.effective_bandwidth());
  const double self = kernel.weight_from_chord2(0.0);
  const double normalizer = cfg.estimator.intensity * cfg.scan_side * cfg.scan_side * cfg.scan_side;

  parallel_for(
      field.size(), cfg.threads,
      [&](std::size_t x) {
        const auto inside = grid.query(to_box(field.window_at(x)));
        field.counts[x] = inside.size();
        if (inside.size() < std::max<std::size_t>(cfg.min_points, 1)) return;
        std::vector<Vec3> marks(inside.size());
        for (std::size_t i = 0; i < inside.size(); ++i) marks[i] = pts.marks[inside[i]];
        std::vector<double> sums(marks.size(), self);
        for (std::size_t i = 0; i < marks.size(); ++i) {
          for (std::size_t j = i + 1; j < marks.size(); ++j) {
            const double w = kernel.weight(marks[i], marks[j]);
            sums[i] += w;
            sums[j] += w;
          }
        }
        double total = 0.0;
        for (const double s : sums) total += log_term(s / normalizer, field.clamped[x]);
        field.values[x] = -total / normalizer;
        field.valid[x] = std::isfinite(field.values[x]) ? 1 : 0;
      },
      16);
  return field;
}

ScanField scan_entropy_field(const FibreSystem& original, const FibreSystem& copy,
                             const ScanConfig& cfg) {
  cfg.validate();
  require_covers(original, cfg.window);
  require_covers(copy, cfg.window);
  ScanField field = empty_field(cfg);
  const IndexedPoints source = split(original);
  const IndexedPoints scored = split(copy);
  const PointGrid source_grid(source.locations, to_box(cfg.window), cfg.scan_side / 2.0);
  const PointGrid scored_grid(scored.locations, to_box(cfg.window), cfg.scan_side / 2.0);
  const SphericalKernel kernel(cfg.estimator.kernel, cfg.effective_bandwidth());
  const double normalizer = cfg.estimator.intensity * cfg.scan_side * cfg.scan_side * cfg.scan_side;

  parallel_for(
      field.size(), cfg.threads,
      [&](std::size_t x) {
        const Box box = to_box(field.window_at(x));
        const auto from = source_grid.query(box);
        const auto to = scored_grid.query(box);
        field.counts[x] = to.size();
        const std::size_t need = std::max<std::size_t>(cfg.min_points, 1);
        if (from.size() < need || to.size() < need) return;
        std::vector<Vec3> marks(from.size());
        for (std::size_t i = 0; i < from.size(); ++i) marks[i] = source.marks[from[i]];
        double total = 0.0;
        for (const std::size_t i : to) {
          const Vec3& eta = scored.marks[i];
          double s = 0.0;
          for (const auto& xi : marks) s += kernel.weight(eta, xi);
          total += log_term(s / normalizer, field.clamped[x]);
        }
        field.values[x] = -total / normalizer;
        field.valid[x] = std::isfinite(field.values[x]) ? 1 : 0;
      },
      16);
  return field;
}

double ScanStats::sigma() const noexcept { return std::sqrt(std::max(0.0, variance)); }

ScanStats robust_stats(std::span<const double> values) {
  if (values.size() < 2) throw NumericalError("robust_stats: need at least two valid values");
  ScanStats stats;
  stats.n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  stats.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  double sum = 0.0;
  for (const double v : values) sum += v;
  stats.mean = sum / static_cast<double>(stats.n);
  double ss = 0.0;
  for (const double v : values) ss += (v - stats.mean) * (v - stats.mean);
  stats.variance = ss / static_cast<double>(stats.n - 1);
  return stats;
}

ScanStats robust_stats(const ScanField& field) {
  std::vector<double> values;
  values.reserve(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (field.valid[i]) values.push_back(field.values[i]);
  }
  return robust_stats(values);
}

std::vector<char> DetectionResult::flag_mask() const {
  std::vector<char> mask(field.size(), 0);
  for (const std::size_t i : flagged) mask[i] = 1;
  return mask;
}

DetectionResult excursion_set(const ScanField& field, const ScanStats& stats, double multiplier) {
  if (!(multiplier > 0.0)) throw ConfigError("excursion_set: multiplier must be positive");
  DetectionResult result{field, stats, multiplier, {}, {}};
  const double sigma = stats.sigma();
  const double threshold = multiplier * sigma;
  result.deviations.assign(field.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!field.valid[i]) continue;
    const double d = field.values[i] - stats.median;
    result.deviations[i] = sigma > 0.0 ? d / sigma : 0.0;
    if (std::abs(d) > threshold) result.flagged.push_back(i);
  }
  return result;
}

OptimalWidth optimal_scan_width(double a, double w, double false_alarm) {
  if (!(a > 0.0) || !(w > a)) throw ConfigError("optimal_scan_width: need 0 < a < w");
  if (!(false_alarm > 0.0 && false_alarm < 1.0)) {
    throw ConfigError("optimal_scan_width: false-alarm level must lie in (0, 1)");
  }
  const double alpha = false_alarm;
  const double radicand = alpha * (w - a) * (w + (3.0 - 4.0 * alpha) * a);
  if (radicand < 0.0) throw ConfigError("optimal_scan_width: negative radicand");
  const double b = (std::sqrt(radicand) - (1.0 - 2.0 * alpha) * a - alpha * w) / (1.0 - alpha);
  return {b, b > 0.0 && b < a};
}

double dvol_bound(double a, double b, double w, double false_alarm) noexcept {
  const double inner = a + b;
  const double outer = w - b;
  const double core = a - b;
  return inner * inner * inner * (1.0 - false_alarm) +
         (outer * outer * outer - core * core * core) * false_alarm;
}

double dvol_between(std::span<const char> first, std::span<const char> second, double mesh) {
  if (first.size() != second.size()) throw ConfigError("dvol: sets live on different lattices");
  std::size_t differ = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if ((first[i] != 0) != (second[i] != 0)) ++differ;
  }
  return static_cast<double>(differ) * mesh * mesh * mesh;
}

std::vector<char> lattice_membership(std::span<const Region> regions, const ScanField& field) {
  std::vector<char> inside(field.size(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Vec3 x = field.lattice.point(i);
    for (const auto& region : regions) {
      if (region_contains(region, x)) {
        inside[i] = 1;
        break;
      }
    }
  }
  return inside;
}

double dvol_estimate(std::span<const Region> regions, const DetectionResult& result) {
  return dvol_between(lattice_membership(regions, result.field), result.flag_mask(),
                      result.field.lattice.mesh());
}

DetectionQuality detection_quality(std::span<const Region> regions,
                                   const DetectionResult& result) {
  DetectionQuality q;
  const auto flags = result.flag_mask();
  std::vector<std::size_t> region_core(regions.size(), 0);
  std::vector<std::size_t> region_hit(regions.size(), 0);
  std::size_t core_hit = 0;
  std::size_t exterior_hit = 0;
  std::size_t boundary_hit = 0;
  for (std::size_t i = 0; i < result.field.size(); ++i) {
    const Cube window = result.field.window_at(i);
    std::optional<std::size_t> core_of;
    bool touches = false;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      if (region_contains(regions[r], window)) core_of = r;
      if (region_intersects(regions[r], window)) touches = true;
    }
    const bool flagged = flags[i] != 0;
    if (core_of) {
      ++q.core_points;
      ++region_core[*core_of];
      if (flagged) {
        ++core_hit;
        ++region_hit[*core_of];
      }
    } else if (!touches) {
      ++q.exterior_points;
      if (flagged) ++exterior_hit;
    } else {
      ++q.boundary_points;
      if (flagged) ++boundary_hit;
    }
  }
  auto rate = [](std::size_t hit, std::size_t total) {
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
  };
  q.coverage = rate(core_hit, q.core_points);
  q.false_positive_rate = rate(exterior_hit, q.exterior_points);
  q.boundary_flag_rate = rate(boundary_hit, q.boundary_points);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    q.region_coverage.push_back(rate(region_hit[r], region_core[r]));
  }
  return q;
}

}  // namespace fibrescan

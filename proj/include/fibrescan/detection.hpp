// detection.hpp -- scanning-window detection of regions whose fibre
// directions follow a different law.
//
// A window B = [0, b]^3 is moved over the lattice points x of W ⊖ B; the
// entropy estimated in B + x forms a random field whose outliers, judged
// against the field median with a k-sigma rule, make up the excursion set.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fibrescan/estimation.hpp"
#include "fibrescan/geometry.hpp"
#include "fibrescan/process.hpp"

namespace fibrescan {

enum class ScanMode {
  Plain,     // one realization; density and sum from the same points
  Modified,  // density from the original, sum over an independent copy
};

struct ScanConfig {
  /// Observation window W.
  Cube window;
  /// Side b of the scanning window B = [0, b]^3.
  double scan_side{0.0};
  /// Lattice mesh r; 0 selects b / 2.
  double mesh{0.0};
  double multiplier{3.0};
  ScanMode mode{ScanMode::Plain};
  /// Kernel, intensity and bandwidth for the local estimates; the window
  /// fields are ignored. A bandwidth of 0 selects default_bandwidth(b^3).
  EstimatorConfig estimator;
  /// Windows holding fewer points are marked invalid.
  std::size_t min_points{30};
  std::size_t threads{1};

  /// Throws ConfigError unless 0 < b < side(W), the mesh and multiplier are
  /// positive and the intensity is positive.
  void validate() const;
  [[nodiscard]] double effective_mesh() const noexcept { return mesh > 0.0 ? mesh : scan_side / 2.0; }
  [[nodiscard]] double effective_bandwidth() const;
  /// Lattice over W ⊖ B.
  [[nodiscard]] Lattice lattice() const;
};

/// Local entropy per lattice point; the window of point x is [x, x + b]^3.
struct ScanField {
  Lattice lattice;
  double scan_side{0.0};
  std::vector<double> values;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> clamped;
  std::vector<char> valid;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  [[nodiscard]] std::size_t valid_count() const noexcept;
  [[nodiscard]] Cube window_at(std::size_t index) const {
    return Cube(lattice.point(index), scan_side);
  }
};

/// Plain mode. Throws ConfigError if W ⊖ B is empty or W is not inside the
/// system's window.
[[nodiscard]] ScanField scan_entropy_field(const FibreSystem& system, const ScanConfig& cfg);
/// Modified mode: densities from `original`, sums over `copy`.
[[nodiscard]] ScanField scan_entropy_field(const FibreSystem& original, const FibreSystem& copy,
                                           const ScanConfig& cfg);

struct ScanStats {
  double median{0.0};
  double mean{0.0};
  /// Sample variance with 1 / (n - 1).
  double variance{0.0};
  std::size_t n{0};

  [[nodiscard]] double sigma() const noexcept;
};

/// Over the given values. Throws NumericalError for fewer than two values.
[[nodiscard]] ScanStats robust_stats(std::span<const double> values);
/// Over the valid values of the field.
[[nodiscard]] ScanStats robust_stats(const ScanField& field);

struct DetectionResult {
  ScanField field;
  ScanStats stats;
  double multiplier{3.0};
  /// Indices of flagged lattice points, increasing.
  std::vector<std::size_t> flagged;
  /// (value - median) / sigma per lattice point; NaN for invalid points and
  /// 0 when sigma is 0.
  std::vector<double> deviations;

  [[nodiscard]] std::vector<char> flag_mask() const;
};

/// Flags exactly the valid points with |value - median| > multiplier * sigma.
[[nodiscard]] DetectionResult excursion_set(const ScanField& field, const ScanStats& stats,
                                            double multiplier);

struct OptimalWidth {
  double value{0.0};
  /// 0 < value < a
  bool valid{false};
};

/// Minimizer over b of dvol_bound for a cubic region of side a in a window of
/// side w. Throws ConfigError unless 0 < a < w and 0 < alpha < 1.
[[nodiscard]] OptimalWidth optimal_scan_width(double a, double w, double false_alarm);

/// (a + b)^3 (1 - alpha) + ((w - b)^3 - (a - b)^3) alpha
[[nodiscard]] double dvol_bound(double a, double b, double w, double false_alarm) noexcept;

/// r^3 times the number of lattice points in exactly one of the two sets.
[[nodiscard]] double dvol_between(std::span<const char> first, std::span<const char> second,
                                  double mesh);

/// Lattice points of the result's field that lie in the union of the regions.
[[nodiscard]] std::vector<char> lattice_membership(std::span<const Region> regions,
                                                   const ScanField& field);

/// Lattice volume of A △ Â.
[[nodiscard]] double dvol_estimate(std::span<const Region> regions, const DetectionResult& result);

/// Lattice points are classified by their scanning window B + x:
///   core      B + x lies inside one region (x ∈ A ⊖ B),
///   exterior  B + x meets no region,
///   boundary  otherwise.
struct DetectionQuality {
  double coverage{0.0};              // flagged fraction of core points
  double false_positive_rate{0.0};   // flagged fraction of exterior points
  double boundary_flag_rate{0.0};    // flagged fraction of boundary points
  std::size_t core_points{0};
  std::size_t exterior_points{0};
  std::size_t boundary_points{0};
  /// Coverage of each region's own core points.
  std::vector<double> region_coverage;
};

[[nodiscard]] DetectionQuality detection_quality(std::span<const Region> regions,
                                                 const DetectionResult& result);

}  // namespace fibrescan

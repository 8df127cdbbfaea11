// estimation.hpp -- directional density and entropy estimators, and the
// normalization that turns the entropy estimate into an asymptotically
// standard normal statistic.
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fibrescan/density.hpp"
#include "fibrescan/directional.hpp"
#include "fibrescan/geometry.hpp"
#include "fibrescan/kernel.hpp"
#include "fibrescan/process.hpp"
#include "fibrescan/random.hpp"

namespace fibrescan {

/// How f_hat is evaluated at the marks when every mark uses the same density
/// estimate (no local sub-window).
enum class DensityEvaluation {
  Automatic,  // Gridded for large point counts, Exact otherwise
  Exact,
  Gridded,  // tabulate f_hat on a fine grid and interpolate
};

/// Lower bound applied to f_hat before taking the logarithm.
inline constexpr double kLogClamp = 1e-12;

struct EstimatorConfig {
  Kernel kernel{KernelType::Tricube};
  double bandwidth{0.0};
  /// Known intensity lambda of the fibre centres.
  double intensity{0.0};
  /// Observation window B; only points located in B enter the entropy sum.
  Cube window;
  /// Local window B'. Each mark xi_i at Y_i is scored against the density
  /// estimated from the points in B' + Y_i. nullopt: one estimate from B.
  std::optional<Cube> sub_window;
  /// Where density-source points are available; B' + Y_i is clipped to it.
  /// Defaults to `window`.
  std::optional<Cube> support;
  DensityEvaluation evaluation{DensityEvaluation::Automatic};
  /// Grid spacing of Gridded evaluation as a fraction of the bandwidth.
  double grid_resolution_factor{1.0 / 16.0};
  std::size_t threads{1};

  /// Throws ConfigError on non-positive intensity, bandwidth outside (0, pi),
  /// an empty window, or a sub-window larger than the window.
  void validate() const;
  [[nodiscard]] Cube support_region() const { return support.value_or(window); }
};

/// f_hat_B(eta): density estimate from the points of `system` located in
/// cfg.window, normalized by lambda * vol(B).
[[nodiscard]] double density_estimate(const FibreSystem& system, const EstimatorConfig& cfg,
                                      const UnitVector3& eta);

/// Density estimate from the points of `system` in cfg.window, reusable for
/// many evaluations.
[[nodiscard]] KernelDensity window_density(const FibreSystem& system,
                                           const EstimatorConfig& cfg);

/// max over grid nodes of |f_hat(eta) - f(eta)|.
[[nodiscard]] double density_sup_error(const FibreSystem& system, const EstimatorConfig& cfg,
                                       const DirectionalModel& truth, const SphereGrid& grid);
/// Same, for estimates already evaluated at the grid nodes.
[[nodiscard]] double density_sup_error(std::span<const double> estimate,
                                       const DirectionalModel& truth, const SphereGrid& grid);

struct EntropyEstimate {
  double value{0.0};
  /// Marks that entered the sum.
  std::size_t terms{0};
  /// Terms whose density estimate was below kLogClamp.
  std::size_t clamped{0};
  /// More than 1% of the terms were clamped.
  bool unreliable{false};
  /// The modified estimator was given the same realization twice.
  bool degenerate_copy{false};
  bool gridded{false};
};

/// -(1 / (lambda vol B)) sum_{Y_i in B} log f_hat(xi_i). With a sub-window the
/// density at xi_i comes from B' + Y_i (which contains Y_i itself).
/// Throws NumericalError when B holds no points.
[[nodiscard]] EntropyEstimate entropy_plain(const FibreSystem& system, const EstimatorConfig& cfg);

/// Cross version: marks of `copy` in B are scored against densities built
/// from `original`. `copy` must be an independent realization of the same
/// process for the estimator to be unbiased; passing the same realization is
/// allowed but flagged.
[[nodiscard]] EntropyEstimate entropy_modified(const FibreSystem& original,
                                               const FibreSystem& copy,
                                               const EstimatorConfig& cfg);

/// Monte Carlo recipe for the centering and scale of the modified estimator.
struct CltRecipe {
  /// Independent realizations used for the mean and the covariances.
  std::size_t replications{180};
  /// Midpoint nodes of the covariance quadrature over B'; a perfect cube.
  std::size_t covariance_nodes{343};
  /// Marks drawn per realization to score the reference window.
  std::size_t marks_per_realization{2000};
  /// Marks drawn per realization and covariance node.
  std::size_t marks_per_node{16};
  /// Split -log f_hat into the exactly computable count part
  /// -log(N / (lambda vol B')) and the conditional shape part.
  bool count_decomposition{true};
};

struct CltNormalization {
  /// E[-log f_hat_{B'}(xi)] for xi an independent mark.
  double mean_neg_log_density{0.0};
  /// Var(log f_hat_{B'}(xi)).
  double log_density_variance{0.0};
  /// int_{R^3} Cov(G(0), G(y)) dy with G(y) = -log f_hat_{B' + y}(xi*).
  double covariance_integral{0.0};
  /// sigma^2 = log_density_variance / lambda + covariance_integral.
  double variance{0.0};
  std::size_t replications{0};
  std::size_t covariance_nodes{0};

  [[nodiscard]] double sigma() const;
  /// Conditional mean of the modified estimate given the copy's count in B.
  [[nodiscard]] double centering(std::size_t copy_count, double intensity,
                                 double window_volume) const noexcept;
};

/// Estimates the centering and scale for cfg (which must have a sub-window)
/// and mark model by simulation. Throws NumericalError if the variance
/// estimate is not positive.
[[nodiscard]] CltNormalization clt_normalize(const EstimatorConfig& cfg,
                                             const DirectionalModel& model,
                                             const CltRecipe& recipe, const RandomStream& rng);

/// sqrt(vol B) (estimate - centering) / sigma
[[nodiscard]] double standardized_statistic(double estimate, double centering, double sigma,
                                            double window_volume);

}  // namespace fibrescan

// stats.hpp -- sample summaries and goodness-of-fit statistics.
#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace fibrescan {

struct SampleSummary {
  std::size_t n{0};
  double mean{0.0};
  /// 1 / (n - 1)
  double variance{0.0};
  double skewness{0.0};
  double excess_kurtosis{0.0};
};

/// Moment summary; skewness and kurtosis use the plain moment ratios
/// m3 / m2^(3/2) and m4 / m2^2 - 3. Throws NumericalError for n < 2.
[[nodiscard]] SampleSummary summarize(std::span<const double> values);

struct KsResult {
  double distance{0.0};
  double p_value{0.0};
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF. The p-value
/// is the asymptotic Kolmogorov tail at (sqrt(n) + 0.12 + 0.11 / sqrt(n)) D.
[[nodiscard]] KsResult ks_test(std::span<const double> values,
                               const std::function<double(double)>& cdf);
[[nodiscard]] KsResult ks_test_normal(std::span<const double> values);

/// P(K > x) for the Kolmogorov distribution.
[[nodiscard]] double kolmogorov_tail(double x);

struct ChiSquareResult {
  double statistic{0.0};
  std::size_t degrees_of_freedom{0};
  double p_value{0.0};
};

/// Pearson test of observed counts against expected counts. Adjacent cells
/// are pooled until each pooled expectation is at least `min_expected`.
[[nodiscard]] ChiSquareResult chi_square_test(std::span<const double> observed,
                                              std::span<const double> expected,
                                              double min_expected = 5.0);

}  // namespace fibrescan

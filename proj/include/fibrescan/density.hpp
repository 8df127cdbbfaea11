// density.hpp -- spherical kernel density estimates and their fast evaluation.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fibrescan/geometry.hpp"
#include "fibrescan/kernel.hpp"

namespace fibrescan {

/// Latitude/longitude bucketing of unit vectors for spherical cap queries.
class SphereIndex {
public:
  /// `cap_radius` is the largest geodesic radius that will be queried.
  SphereIndex(std::span<const Vec3> directions, double cap_radius);

  [[nodiscard]] std::size_t size() const noexcept { return xs_.size(); }

  /// Calls fn(x, y, z) for a superset of the stored directions within
  /// geodesic distance cap_radius of `center`.
  template <class Fn>
  void for_each_candidate(const Vec3& center, Fn&& fn) const {
    visit_ranges(center, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) fn(xs_[i], ys_[i], zs_[i]);
    });
  }

  /// Calls fn(begin, end) for the candidate slices of the coordinate arrays.
  template <class Fn>
  void visit_ranges(const Vec3& center, Fn&& fn) const;

  [[nodiscard]] std::span<const double> xs() const noexcept { return xs_; }
  [[nodiscard]] std::span<const double> ys() const noexcept { return ys_; }
  [[nodiscard]] std::span<const double> zs() const noexcept { return zs_; }

private:
  [[nodiscard]] std::size_t band_of(double theta) const noexcept;

  double cap_radius_;
  std::size_t bands_;
  std::size_t sectors_;
  double band_width_;
  double sector_width_;
  std::vector<std::size_t> start_;  // bands * sectors + 1
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::vector<double> zs_;
};

/// f_hat(eta) = (1 / normalizer) * sum_i w(eta, xi_i), where w is the
/// spherical kernel weight and the normalizer is lambda * vol of the window
/// the marks come from.
class KernelDensity {
public:
  KernelDensity(std::span<const Vec3> marks, const SphericalKernel& kernel, double normalizer);

  [[nodiscard]] double operator()(const Vec3& eta) const;
  [[nodiscard]] double operator()(const UnitVector3& eta) const { return (*this)(eta.vec()); }

  [[nodiscard]] std::size_t size() const noexcept { return count_; }
  [[nodiscard]] const SphericalKernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] double normalizer() const noexcept { return normalizer_; }

private:
  SphericalKernel kernel_;
  double normalizer_;
  std::size_t count_;
  std::vector<Vec3> marks_;  // used when too few marks to index
  std::vector<SphereIndex> index_;  // zero or one entry
};

/// A kernel density estimate tabulated at the nodes of a latitude/longitude
/// grid with spacing about `resolution` and evaluated by bicubic Lagrange
/// interpolation. Rows beyond the poles are obtained by reflection through
/// the pole, so interpolation is seamless everywhere.
///
/// The table is filled by scattering each mark onto the nodes inside its cap,
/// whose extent is known exactly per row. Node sums run over the marks in
/// input order whatever the thread count.
class GriddedDensity {
public:
  GriddedDensity(std::span<const Vec3> marks, const SphericalKernel& kernel, double normalizer,
                 double resolution, std::size_t threads = 1);

  [[nodiscard]] double operator()(const Vec3& eta) const noexcept;
  [[nodiscard]] double operator()(const UnitVector3& eta) const noexcept {
    return (*this)(eta.vec());
  }

  /// Tabulated value at row i (polar angle (i + 1/2) * pi / rows) and column
  /// j (azimuth j * 2 pi / columns).
  [[nodiscard]] double node_value(std::size_t row, std::size_t column) const noexcept {
    return values_[row * columns_ + column];
  }
  [[nodiscard]] Vec3 node(std::size_t row, std::size_t column) const noexcept;
  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t columns() const noexcept { return columns_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return values_.size(); }
  /// Node count of a grid with the given resolution.
  [[nodiscard]] static std::size_t node_count_for(double resolution) noexcept;

private:
  [[nodiscard]] double at(std::ptrdiff_t row, std::ptrdiff_t column) const noexcept;

  std::size_t rows_;
  std::size_t columns_;
  double row_step_;
  double column_step_;
  std::vector<double> values_;
};

// --- template implementation ---------------------------------------------

template <class Fn>
void SphereIndex::visit_ranges(const Vec3& center, Fn&& fn) const {
  if (xs_.empty()) return;
  const double theta = std::acos(std::clamp(center.z, -1.0, 1.0));
  const double lo = theta - cap_radius_;
  const double hi = theta + cap_radius_;
  const std::size_t band_lo = band_of(std::max(0.0, lo));
  const std::size_t band_hi = band_of(std::min(kPi, hi));
  const bool polar = lo <= 0.0 || hi >= kPi;
  if (polar) {
    fn(start_[band_lo * sectors_], start_[(band_hi + 1) * sectors_]);
    return;
  }
  const double half = std::asin(std::min(1.0, std::sin(cap_radius_) / std::sin(theta)));
  if (2.0 * half + 2.0 * sector_width_ >= 2.0 * kPi) {
    fn(start_[band_lo * sectors_], start_[(band_hi + 1) * sectors_]);
    return;
  }
  double phi = std::atan2(center.y, center.x);
  if (phi < 0.0) phi += 2.0 * kPi;
  const auto first = static_cast<std::ptrdiff_t>(std::floor((phi - half) / sector_width_));
  const auto last = static_cast<std::ptrdiff_t>(std::floor((phi + half) / sector_width_));
  const auto n = static_cast<std::ptrdiff_t>(sectors_);
  for (std::size_t band = band_lo; band <= band_hi; ++band) {
    const std::size_t base = band * sectors_;
    // Split the wrapped sector interval into at most two contiguous runs.
    std::ptrdiff_t s = first;
    while (s <= last) {
      const std::ptrdiff_t wrapped = ((s % n) + n) % n;
      const std::ptrdiff_t run_end = std::min(last, s + (n - 1 - wrapped));
      const std::size_t b = start_[base + static_cast<std::size_t>(wrapped)];
      const std::size_t e =
          start_[base + static_cast<std::size_t>(wrapped + (run_end - s)) + 1];
      if (e > b) fn(b, e);
      s = run_end + 1;
    }
  }
}

}  // namespace fibrescan

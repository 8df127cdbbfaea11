#include "fibrescan/density.hpp"

#include <algorithm>
#include <cmath>

#include "fibrescan/error.hpp"
#include "fibrescan/parallel.hpp"

namespace fibrescan {

namespace {

constexpr std::size_t kIndexThreshold = 64;
constexpr std::size_t kMaxBands = 512;

double polar_of(const Vec3& v) noexcept { return std::atan2(std::hypot(v.x, v.y), v.z); }

double azimuth_of(const Vec3& v) noexcept {
  double phi = std::atan2(v.y, v.x);
  if (phi < 0.0) phi += 2.0 * kPi;
  return phi;
}

/// Cubic Lagrange weights for nodes -1, 0, 1, 2 at t in [0, 1].
void lagrange_weights(double t, double* w) noexcept {
  const double tp = t + 1.0;
  const double tm = t - 1.0;
  const double tmm = t - 2.0;
  w[0] = -t * tm * tmm / 6.0;
  w[1] = tp * tm * tmm / 2.0;
  w[2] = -tp * t * tmm / 2.0;
  w[3] = tp * t * tm / 6.0;
}

}  // namespace

SphereIndex::SphereIndex(std::span<const Vec3> directions, double cap_radius)
    // Widened slightly so rounding in the angle computations never drops a
    // direction at distance just below the radius.
    : cap_radius_(cap_radius * (1.0 + 1e-9) + 1e-12) {
  if (!(cap_radius > 0.0)) throw ConfigError("SphereIndex: cap radius must be positive");
  bands_ = cap_radius_ >= kPi
               ? 1
               : std::clamp<std::size_t>(
                     static_cast<std::size_t>(std::ceil(4.0 * kPi / cap_radius_)), 1, kMaxBands);
  sectors_ = 2 * bands_;
  band_width_ = kPi / static_cast<double>(bands_);
  sector_width_ = 2.0 * kPi / static_cast<double>(sectors_);

  const std::size_t buckets = bands_ * sectors_;
  std::vector<std::size_t> bucket(directions.size());
  start_.assign(buckets + 1, 0);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const std::size_t band = band_of(polar_of(directions[i]));
    const auto sector = std::min(
        sectors_ - 1, static_cast<std::size_t>(azimuth_of(directions[i]) / sector_width_));
    bucket[i] = band * sectors_ + sector;
    ++start_[bucket[i] + 1];
  }
  for (std::size_t b = 0; b < buckets; ++b) start_[b + 1] += start_[b];
  xs_.resize(directions.size());
  ys_.resize(directions.size());
  zs_.resize(directions.size());
  std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < directions.size(); ++i) {
    const std::size_t slot = fill[bucket[i]]++;
    xs_[slot] = directions[i].x;
    ys_[slot] = directions[i].y;
    zs_[slot] = directions[i].z;
  }
}

std::size_t SphereIndex::band_of(double theta) const noexcept {
  const auto band = static_cast<std::size_t>(std::max(0.0, theta) / band_width_);
  return std::min(bands_ - 1, band);
}

KernelDensity::KernelDensity(std::span<const Vec3> marks, const SphericalKernel& kernel,
                             double normalizer)
    : kernel_(kernel), normalizer_(normalizer), count_(marks.size()) {
  if (!(normalizer > 0.0)) throw ConfigError("KernelDensity: normalizer must be positive");
  if (marks.size() > kIndexThreshold) {
    index_.emplace_back(marks, kernel.bandwidth());
  } else {
    marks_.assign(marks.begin(), marks.end());
  }
}

double KernelDensity::operator()(const Vec3& eta) const {
  double sum = 0.0;
  if (index_.empty()) {
    for (const auto& xi : marks_) sum += kernel_.weight(eta, xi);
  } else {
    const SphereIndex& index = index_.front();
    const double* xs = index.xs().data();
    const double* ys = index.ys().data();
    const double* zs = index.zs().data();
    index.visit_ranges(eta, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const double dx = eta.x - xs[i];
        const double dy = eta.y - ys[i];
        const double dz = eta.z - zs[i];
        sum += kernel_.weight_from_chord2(dx * dx + dy * dy + dz * dz);
      }
    });
  }
  return sum / normalizer_;
}

std::size_t GriddedDensity::node_count_for(double resolution) noexcept {
  const auto rows = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(kPi / resolution)));
  return rows * 2 * rows;
}

GriddedDensity::GriddedDensity(std::span<const Vec3> marks, const SphericalKernel& kernel,
                               double normalizer, double resolution, std::size_t threads) {
  if (!(resolution > 0.0)) throw ConfigError("GriddedDensity: resolution must be positive");
  if (!(normalizer > 0.0)) throw ConfigError("GriddedDensity: normalizer must be positive");
  rows_ = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(kPi / resolution)));
  columns_ = 2 * rows_;
  row_step_ = kPi / static_cast<double>(rows_);
  column_step_ = 2.0 * kPi / static_cast<double>(columns_);
  values_.assign(rows_ * columns_, 0.0);

  std::vector<double> row_sin(rows_);
  std::vector<double> row_cos(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double theta = (static_cast<double>(i) + 0.5) * row_step_;
    row_sin[i] = std::sin(theta);
    row_cos[i] = std::cos(theta);
  }
  std::vector<double> col_cos(columns_);
  std::vector<double> col_sin(columns_);
  for (std::size_t j = 0; j < columns_; ++j) {
    const double phi = static_cast<double>(j) * column_step_;
    col_cos[j] = std::cos(phi);
    col_sin[j] = std::sin(phi);
  }

  struct Mark {
    Vec3 v;
    double theta;
    double phi;
  };
  std::vector<Mark> prepared(marks.size());
  for (std::size_t k = 0; k < marks.size(); ++k) {
    prepared[k] = {marks[k], polar_of(marks[k]), azimuth_of(marks[k])};
  }

  const double h = kernel.bandwidth();
  const double cos_h = std::cos(h);
  const auto cols = static_cast<std::ptrdiff_t>(columns_);
  const std::size_t workers = std::min(resolve_threads(threads), rows_);
  parallel_for(workers, workers, [&](std::size_t w) {
    const std::size_t row_begin = rows_ * w / workers;
    const std::size_t row_end = rows_ * (w + 1) / workers;
    for (const Mark& m : prepared) {
      const double first = (m.theta - h) / row_step_ - 0.5;
      const double last = (m.theta + h) / row_step_ - 0.5;
      const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil(first - 1.0)));
      const auto hi = static_cast<std::size_t>(
          std::min(static_cast<double>(rows_ - 1), std::floor(last + 1.0)));
      const double sin_m = std::sin(m.theta);
      const double cos_m = std::cos(m.theta);
      for (std::size_t i = std::max(lo, row_begin); i < std::min(hi + 1, row_end); ++i) {
        // Azimuth half-width of the cap on this row: cos d >= cos h.
        const double denom = row_sin[i] * sin_m;
        std::ptrdiff_t j_first = 0;
        std::ptrdiff_t j_last = cols - 1;
        if (denom > 1e-300) {
          const double c = (cos_h - row_cos[i] * cos_m) / denom;
          if (c > 1.0 + 1e-12) continue;
          if (c > -1.0) {
            const double half = std::acos(std::min(1.0, c));
            j_first = static_cast<std::ptrdiff_t>(std::floor((m.phi - half) / column_step_)) - 1;
            j_last = static_cast<std::ptrdiff_t>(std::ceil((m.phi + half) / column_step_)) + 1;
            if (j_last - j_first + 1 >= cols) {
              j_first = 0;
              j_last = cols - 1;
            }
          }
        }
        double* row = values_.data() + i * columns_;
        const double nz = row_cos[i];
        const double s = row_sin[i];
        auto scatter = [&](std::size_t begin, std::size_t end) {
          for (std::size_t j = begin; j < end; ++j) {
            const double dx = s * col_cos[j] - m.v.x;
            const double dy = s * col_sin[j] - m.v.y;
            const double dz = nz - m.v.z;
            row[j] += kernel.weight_from_chord2(dx * dx + dy * dy + dz * dz);
          }
        };
        // The column range may wrap around azimuth 0.
        const std::ptrdiff_t shift = j_first < 0 ? cols : 0;
        const std::ptrdiff_t a = j_first + shift;
        const std::ptrdiff_t b = j_last + shift;
        if (b < cols) {
          scatter(static_cast<std::size_t>(a), static_cast<std::size_t>(b + 1));
        } else {
          scatter(static_cast<std::size_t>(a), columns_);
          scatter(0, static_cast<std::size_t>(b + 1 - cols));
        }
      }
    }
  });
  for (double& value : values_) value /= normalizer;
}

Vec3 GriddedDensity::node(std::size_t row, std::size_t column) const noexcept {
  const double theta = (static_cast<double>(row) + 0.5) * row_step_;
  const double phi = static_cast<double>(column) * column_step_;
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

double GriddedDensity::at(std::ptrdiff_t row, std::ptrdiff_t column) const noexcept {
  const auto rows = static_cast<std::ptrdiff_t>(rows_);
  const auto cols = static_cast<std::ptrdiff_t>(columns_);
  if (row < 0) {
    row = -row - 1;
    column += cols / 2;
  } else if (row >= rows) {
    row = 2 * rows - row - 1;
    column += cols / 2;
  }
  column = ((column % cols) + cols) % cols;
  return values_[static_cast<std::size_t>(row * cols + column)];
}

double GriddedDensity::operator()(const Vec3& eta) const noexcept {
  const double x = polar_of(eta) / row_step_ - 0.5;
  const double y = azimuth_of(eta) / column_step_;
  const double i0 = std::floor(x);
  const double j0 = std::floor(y);
  double wr[4];
  double wc[4];
  lagrange_weights(x - i0, wr);
  lagrange_weights(y - j0, wc);
  const auto row0 = static_cast<std::ptrdiff_t>(i0);
  const auto col0 = static_cast<std::ptrdiff_t>(j0);
  double value = 0.0;
  for (std::ptrdiff_t a = 0; a < 4; ++a) {
    double row_value = 0.0;
    for (std::ptrdiff_t b = 0; b < 4; ++b) row_value += wc[b] * at(row0 - 1 + a, col0 - 1 + b);
    value += wr[a] * row_value;
  }
  return value;
}

}  // namespace fibrescan

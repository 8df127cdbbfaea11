#include "fibrescan/point_index.hpp"

#include <algorithm>
#include <cmath>

#include "fibrescan/error.hpp"

namespace fibrescan {

namespace {

constexpr std::size_t kMaxCellsPerAxis = 512;

}  // namespace

PointGrid::PointGrid(std::span<const Vec3> locations, const Box& bounds, double cell_size)
    : locations_(locations.begin(), locations.end()), origin_(bounds.lower) {
  if (!(cell_size > 0.0)) throw ConfigError("PointGrid: cell size must be positive");
  double cell = cell_size;
  for (std::size_t a = 0; a < 3; ++a) {
    const double extent = std::max(0.0, bounds.upper[a] - bounds.lower[a]);
    cell = std::max(cell, extent / static_cast<double>(kMaxCellsPerAxis));
  }
  inv_cell_ = 1.0 / cell;
  for (std::size_t a = 0; a < 3; ++a) {
    const double extent = std::max(0.0, bounds.upper[a] - bounds.lower[a]);
    dims_[a] = static_cast<std::size_t>(std::floor(extent * inv_cell_)) + 1;
  }
  const std::size_t cells = dims_[0] * dims_[1] * dims_[2];
  std::vector<std::size_t> cell_id(locations_.size());
  start_.assign(cells + 1, 0);
  for (std::size_t i = 0; i < locations_.size(); ++i) {
    const auto c = cell_of(locations_[i]);
    cell_id[i] = (c[0] * dims_[1] + c[1]) * dims_[2] + c[2];
    ++start_[cell_id[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) start_[c + 1] += start_[c];
  order_.resize(locations_.size());
  std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
  for (std::size_t i = 0; i < locations_.size(); ++i) order_[fill[cell_id[i]]++] = i;
}

std::array<std::size_t, 3> PointGrid::cell_of(const Vec3& p) const noexcept {
  std::array<std::size_t, 3> c{};
  for (std::size_t a = 0; a < 3; ++a) {
    const double t = std::floor((p[a] - origin_[a]) * inv_cell_);
    const double clamped = std::clamp(t, 0.0, static_cast<double>(dims_[a] - 1));
    c[a] = static_cast<std::size_t>(clamped);
  }
  return c;
}

std::vector<std::size_t> PointGrid::query(const Box& box) const {
  std::vector<std::size_t> out;
  for_each_in(box, [&](std::size_t i) { out.push_back(i); });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fibrescan

// point_index.hpp -- bucket grid over point locations for box queries.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "fibrescan/geometry.hpp"

namespace fibrescan {

/// Uniform bucket grid over a bounding box. Stores indices into the location
/// array it was built from; queries return indices in increasing order within
/// each bucket.
class PointGrid {
public:
  PointGrid(std::span<const Vec3> locations, const Box& bounds, double cell_size);

  [[nodiscard]] std::size_t size() const noexcept { return order_.size(); }

  /// Calls fn(index) for every point inside the closed box.
  template <class Fn>
  void for_each_in(const Box& box, Fn&& fn) const {
    if (order_.empty() || box.empty()) return;
    const auto lo = cell_of(box.lower);
    const auto hi = cell_of(box.upper);
    for (std::size_t i = lo[0]; i <= hi[0]; ++i) {
      for (std::size_t j = lo[1]; j <= hi[1]; ++j) {
        for (std::size_t k = lo[2]; k <= hi[2]; ++k) {
          const std::size_t c = (i * dims_[1] + j) * dims_[2] + k;
          for (std::size_t s = start_[c]; s < start_[c + 1]; ++s) {
            const std::size_t idx = order_[s];
            if (box.contains(locations_[idx])) fn(idx);
          }
        }
      }
    }
  }

  /// Indices of the points inside the closed box, in increasing order.
  [[nodiscard]] std::vector<std::size_t> query(const Box& box) const;

private:
  [[nodiscard]] std::array<std::size_t, 3> cell_of(const Vec3& p) const noexcept;

  std::vector<Vec3> locations_;
  Vec3 origin_;
  double inv_cell_;
  std::array<std::size_t, 3> dims_{};
  std::vector<std::size_t> start_;
  std::vector<std::size_t> order_;
};

}  // namespace fibrescan

// process.hpp -- marked Poisson point processes of fibre centres.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fibrescan/directional.hpp"
#include "fibrescan/geometry.hpp"
#include "fibrescan/random.hpp"

namespace fibrescan {

/// Fibre centre with its unit direction.
struct MarkedPoint {
  Vec3 location;
  UnitVector3 mark;

  friend bool operator==(const MarkedPoint&, const MarkedPoint&) = default;
};

struct Ball {
  Vec3 center;
  double radius{0.0};
};

/// Inhomogeneity region: a cube, or a ball for shape-mismatch experiments.
using Region = std::variant<Cube, Ball>;

[[nodiscard]] bool region_contains(const Region& region, const Vec3& p) noexcept;
/// cube ⊆ region
[[nodiscard]] bool region_contains(const Region& region, const Cube& cube) noexcept;
/// cube ∩ region ≠ ∅
[[nodiscard]] bool region_intersects(const Region& region, const Cube& cube) noexcept;
[[nodiscard]] Box bounding_box(const Region& region) noexcept;
[[nodiscard]] double region_volume(const Region& region) noexcept;

/// A realization of the marked process observed in `window`. Immutable.
class FibreSystem {
public:
  FibreSystem(const Cube& window, double intensity, std::vector<MarkedPoint> points,
              std::optional<double> fibre_length = std::nullopt);

  [[nodiscard]] const Cube& window() const noexcept { return window_; }
  [[nodiscard]] double intensity() const noexcept { return intensity_; }
  [[nodiscard]] std::span<const MarkedPoint> points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
  [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
  [[nodiscard]] std::optional<double> fibre_length() const noexcept { return fibre_length_; }

  [[nodiscard]] FibreSystem with_fibre_length(double length) const;

  friend bool operator==(const FibreSystem&, const FibreSystem&) = default;

private:
  Cube window_;
  double intensity_;
  std::vector<MarkedPoint> points_;
  std::optional<double> fibre_length_;
};

/// Marks drawn from `inside` for centres in any region, from `outside` otherwise.
struct InhomogeneitySpec {
  std::vector<Region> regions;
  DirectionalModel inside;
  DirectionalModel outside;
};

struct SimulationOptions {
  /// Refuse to simulate when intensity * volume exceeds this.
  double max_expected_points = 1e8;
  /// Sub-volumes per axis, each with its own stream; 0 derives it from the
  /// expected count. Never derived from the thread count.
  std::size_t blocks_per_axis = 0;
  /// 0 = hardware concurrency.
  std::size_t threads = 0;
};

[[nodiscard]] FibreSystem simulate_homogeneous(const Cube& window, double intensity,
                                               const DirectionalModel& model,
                                               const RandomStream& rng,
                                               const SimulationOptions& options = {});

/// Throws ConfigError if a region leaves the window or two regions overlap.
[[nodiscard]] FibreSystem simulate_with_inhomogeneity(const Cube& window, double intensity,
                                                      const InhomogeneitySpec& spec,
                                                      const RandomStream& rng,
                                                      const SimulationOptions& options = {});

/// Points with location in `sub`; the result is observed in `sub`.
[[nodiscard]] FibreSystem restrict(const FibreSystem& system, const Cube& sub);

/// Number of points located in `cube`.
[[nodiscard]] std::size_t count_in(const FibreSystem& system, const Cube& cube) noexcept;

/// N / vol(window), for data whose intensity is unknown.
[[nodiscard]] double estimate_intensity(const FibreSystem& system);

struct Segment {
  Vec3 first;
  Vec3 second;
};

/// Endpoints Y -/+ (l / 2) xi for every fibre. Throws ConfigError without a fibre length.
[[nodiscard]] std::vector<Segment> fibre_segments(const FibreSystem& system);

/// N pi r^2 l / vol(window), ignoring overlaps and boundary truncation.
[[nodiscard]] double volume_fraction(const FibreSystem& system, double fibre_radius);

/// CSV with header `x,y,z,dx,dy,dz`, shortest round-trip decimal representation.
void write_point_cloud(const FibreSystem& system, std::ostream& out);

/// Reads the CSV written by write_point_cloud. Directions must have unit norm
/// within 1e-6 and are renormalized; every location must lie in `window`.
/// Throws IoError on malformed input.
[[nodiscard]] FibreSystem read_point_cloud(std::istream& in, const Cube& window, double intensity,
                                           std::optional<double> fibre_length = std::nullopt);

}  // namespace fibrescan

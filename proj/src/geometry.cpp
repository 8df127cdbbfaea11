#include "fibrescan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fibrescan/error.hpp"

namespace fibrescan {

namespace {

constexpr double kUnitTolerance = 1e-12;

}  // namespace

UnitVector3::UnitVector3(double x, double y, double z) : v_{x, y, z} {
  const double n2 = dot(v_, v_);
  if (!std::isfinite(n2) || std::abs(std::sqrt(n2) - 1.0) > kUnitTolerance) {
    throw ConfigError("UnitVector3: vector is not unit-normalized (norm " +
                      std::to_string(std::sqrt(n2)) + ")");
  }
}

UnitVector3 UnitVector3::normalized(const Vec3& v) {
  const double n = norm(v);
  if (!std::isfinite(n) || n == 0.0) {
    throw ConfigError("UnitVector3: cannot normalize a zero or non-finite vector");
  }
  return from_raw(v * (1.0 / n));
}

UnitVector3 UnitVector3::checked(const Vec3& v, double tolerance) {
  const double n = norm(v);
  if (!std::isfinite(n) || std::abs(n - 1.0) > tolerance) {
    throw ConfigError("direction is not unit-normalized (norm " + std::to_string(n) + ")");
  }
  // already unit to rounding: keep the bits so written vectors read back exactly
  if (std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon()) return from_raw(v);
  return from_raw(v * (1.0 / n));
}

UnitVector3 UnitVector3::from_spherical(double theta, double phi) noexcept {
  const double s = std::sin(theta);
  return from_raw({s * std::cos(phi), s * std::sin(phi), std::cos(theta)});
}

double UnitVector3::polar_angle() const noexcept {
  return std::atan2(std::hypot(v_.x, v_.y), v_.z);
}

double UnitVector3::azimuth() const noexcept {
  double phi = std::atan2(v_.y, v_.x);
  if (phi < 0.0) phi += 2.0 * kPi;
  return phi >= 2.0 * kPi ? 0.0 : phi;
}

// Branchless orthonormal basis (Duff et al. 2017).
Frame::Frame(const UnitVector3& axis_direction) noexcept : axis(axis_direction.vec()) {
  const double sign = std::copysign(1.0, axis.z);
  const double a = -1.0 / (sign + axis.z);
  const double b = axis.x * axis.y * a;
  first = {1.0 + sign * axis.x * axis.x * a, sign * b, -sign * axis.x};
  second = {b, sign + axis.y * axis.y * a, -axis.y};
}

double geodesic_distance(const UnitVector3& a, const UnitVector3& b) noexcept {
  return std::atan2(norm(cross(a.vec(), b.vec())), dot(a, b));
}

double volume_density(const UnitVector3& eta, const UnitVector3& xi) {
  const double r = geodesic_distance(eta, xi);
  if (r == 0.0) return 1.0;
  if (r >= kPi) {
    throw ConfigError("volume_density: antipodal directions (geodesic distance pi)");
  }
  return std::abs(std::sin(r)) / r;
}

Cube::Cube(const Vec3& origin, double side) : origin_(origin), side_(side) {
  if (!(side >= 0.0) || !std::isfinite(side)) {
    throw ConfigError("Cube: side must be finite and non-negative");
  }
}

bool Cube::contains(const Vec3& p) const noexcept {
  const Vec3 u = upper();
  return p.x >= origin_.x && p.x <= u.x && p.y >= origin_.y && p.y <= u.y && p.z >= origin_.z &&
         p.z <= u.z;
}

bool Cube::contains(const Cube& other) const noexcept {
  return contains(other.origin()) && contains(other.upper());
}

bool Cube::intersects(const Cube& other) const noexcept {
  return !intersect(to_box(*this), to_box(other)).empty();
}

double Box::volume() const noexcept {
  if (empty()) return 0.0;
  return (upper.x - lower.x) * (upper.y - lower.y) * (upper.z - lower.z);
}

bool Box::contains(const Vec3& p) const noexcept {
  return p.x >= lower.x && p.x <= upper.x && p.y >= lower.y && p.y <= upper.y && p.z >= lower.z &&
         p.z <= upper.z;
}

bool Box::empty() const noexcept {
  return upper.x < lower.x || upper.y < lower.y || upper.z < lower.z;
}

Box to_box(const Cube& c) noexcept { return {c.origin(), c.upper()}; }

Box intersect(const Box& a, const Box& b) noexcept {
  return {{std::max(a.lower.x, b.lower.x), std::max(a.lower.y, b.lower.y),
           std::max(a.lower.z, b.lower.z)},
          {std::min(a.upper.x, b.upper.x), std::min(a.upper.y, b.upper.y),
           std::min(a.upper.z, b.upper.z)}};
}

std::optional<Cube> erode(const Cube& outer, const Cube& structuring) {
  const double side = outer.side() - structuring.side();
  if (side < 0.0) return std::nullopt;
  return Cube(outer.origin() - structuring.origin(), side);
}

Cube dilate(const Cube& inner, const Cube& structuring) {
  return Cube(inner.origin() + structuring.origin(), inner.side() + structuring.side());
}

Lattice::Lattice(const Cube& bounds, double mesh) : bounds_(bounds), mesh_(mesh) {
  if (!(mesh > 0.0) || !std::isfinite(mesh)) {
    throw ConfigError("Lattice: mesh must be positive");
  }
  // Relative slack so that side = k * mesh keeps its last point despite rounding.
  const double ratio = bounds.side() / mesh;
  per_axis_ = static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12) + 1e-12)) + 1;
}

Vec3 Lattice::point(std::size_t index) const noexcept {
  const std::size_t k = index % per_axis_;
  const std::size_t j = (index / per_axis_) % per_axis_;
  const std::size_t i = index / (per_axis_ * per_axis_);
  const Vec3& o = bounds_.origin();
  return {o.x + mesh_ * static_cast<double>(i), o.y + mesh_ * static_cast<double>(j),
          o.z + mesh_ * static_cast<double>(k)};
}

std::vector<Vec3> Lattice::points() const {
  std::vector<Vec3> out;
  out.reserve(size());
  for (std::size_t n = 0; n < size(); ++n) out.push_back(point(n));
  return out;
}

SphereGrid SphereGrid::equal_area(std::size_t bands) {
  if (bands == 0) throw ConfigError("SphereGrid: need at least one band");
  SphereGrid grid;
  grid.band_offset_.push_back(0);
  const double dz = 2.0 / static_cast<double>(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const double z_hi = 1.0 - dz * static_cast<double>(b);
    const double z_lo = z_hi - dz;
    const double z_mid = 0.5 * (z_hi + z_lo);
    const double theta_mid = std::acos(z_mid);
    const auto cells = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::lround(2.0 * static_cast<double>(bands) * std::sin(theta_mid))));
    const double weight = 2.0 * kPi * dz / static_cast<double>(cells);
    const double r = std::sqrt(std::max(0.0, 1.0 - z_mid * z_mid));
    for (std::size_t c = 0; c < cells; ++c) {
      const double phi = 2.0 * kPi * (static_cast<double>(c) + 0.5) / static_cast<double>(cells);
      grid.nodes_.push_back(
          UnitVector3::normalized({r * std::cos(phi), r * std::sin(phi), z_mid}));
      grid.weights_.push_back(weight);
    }
    grid.band_offset_.push_back(grid.nodes_.size());
  }
  return grid;
}

SphereGrid SphereGrid::standard() { return equal_area(40); }

std::size_t SphereGrid::cell_index(const UnitVector3& u) const noexcept {
  const std::size_t nb = bands();
  const double t = (1.0 - u.z()) * 0.5 * static_cast<double>(nb);
  const std::size_t band = std::min(nb - 1, static_cast<std::size_t>(std::max(0.0, t)));
  const std::size_t cells = band_offset_[band + 1] - band_offset_[band];
  const double s = u.azimuth() / (2.0 * kPi) * static_cast<double>(cells);
  const std::size_t cell = std::min(cells - 1, static_cast<std::size_t>(std::max(0.0, s)));
  return band_offset_[band] + cell;
}

SphereGrid::CellBounds SphereGrid::cell_bounds(std::size_t index) const noexcept {
  const auto it = std::upper_bound(band_offset_.begin(), band_offset_.end(), index);
  const auto band = static_cast<std::size_t>(it - band_offset_.begin()) - 1;
  const std::size_t cells = band_offset_[band + 1] - band_offset_[band];
  const std::size_t cell = index - band_offset_[band];
  const double dz = 2.0 / static_cast<double>(bands());
  const double z_hi = 1.0 - dz * static_cast<double>(band);
  const double width = 2.0 * kPi / static_cast<double>(cells);
  return {z_hi, z_hi - dz, width * static_cast<double>(cell),
          width * static_cast<double>(cell + 1)};
}

double sphere_integrate(const std::function<double(const UnitVector3&)>& fn,
                        const SphereGrid& grid) {
  double sum = 0.0;
  const auto nodes = grid.nodes();
  const auto weights = grid.weights();
  for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * fn(nodes[i]);
  return sum;
}

}  // namespace fibrescan

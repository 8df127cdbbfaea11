// geometry.hpp -- Euclidean and spherical primitives.
//
// Points and vectors in R^3, unit vectors on S^2, closed axis-aligned cubes
// with Minkowski erosion/dilation, cubic lattices and a deterministic
// equal-area quadrature grid on the sphere.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace fibrescan {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr Vec3& operator+=(const Vec3& o) noexcept {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) noexcept {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) noexcept {
    x *= s;
    y *= s;
    z *= s;
    return *this;
  }

  friend constexpr Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
  friend constexpr Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
  friend constexpr Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
  friend constexpr Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
  friend constexpr Vec3 operator-(const Vec3& a) noexcept { return {-a.x, -a.y, -a.z}; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;

  [[nodiscard]] constexpr double operator[](std::size_t i) const noexcept {
    return i == 0 ? x : (i == 1 ? y : z);
  }
};

[[nodiscard]] constexpr double dot(const Vec3& a, const Vec3& b) noexcept {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
[[nodiscard]] constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
[[nodiscard]] inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

/// Point of S^2. Construction checks |v| = 1 within 1e-12; use normalized()
/// for arbitrary nonzero input.
class UnitVector3 {
public:
  /// e_3
  constexpr UnitVector3() noexcept = default;
  UnitVector3(double x, double y, double z);
  explicit UnitVector3(const Vec3& v) : UnitVector3(v.x, v.y, v.z) {}

  /// Throws ConfigError for the zero vector or non-finite input.
  static UnitVector3 normalized(const Vec3& v);
  /// Accepts |v| = 1 within `tolerance` and renormalizes; throws otherwise.
  static UnitVector3 checked(const Vec3& v, double tolerance);

  static UnitVector3 e1() noexcept { return from_raw({1.0, 0.0, 0.0}); }
  static UnitVector3 e2() noexcept { return from_raw({0.0, 1.0, 0.0}); }
  static UnitVector3 e3() noexcept { return from_raw({0.0, 0.0, 1.0}); }

  /// Polar angle theta in [0, pi] and azimuth phi in [0, 2 pi).
  static UnitVector3 from_spherical(double theta, double phi) noexcept;

  [[nodiscard]] constexpr double x() const noexcept { return v_.x; }
  [[nodiscard]] constexpr double y() const noexcept { return v_.y; }
  [[nodiscard]] constexpr double z() const noexcept { return v_.z; }
  [[nodiscard]] constexpr const Vec3& vec() const noexcept { return v_; }

  [[nodiscard]] double polar_angle() const noexcept;
  [[nodiscard]] double azimuth() const noexcept;

  UnitVector3 operator-() const noexcept { return from_raw(-v_); }
  friend constexpr bool operator==(const UnitVector3&, const UnitVector3&) = default;

private:
  static UnitVector3 from_raw(const Vec3& v) noexcept {
    UnitVector3 u;
    u.v_ = v;
    return u;
  }

  Vec3 v_{0.0, 0.0, 1.0};
};

[[nodiscard]] inline double dot(const UnitVector3& a, const UnitVector3& b) noexcept {
  return dot(a.vec(), b.vec());
}

/// Orthonormal frame whose third axis is `axis`; used to rotate e_3 onto a mean direction.
struct Frame {
  Vec3 first;
  Vec3 second;
  Vec3 axis;

  explicit Frame(const UnitVector3& axis_direction) noexcept;

  /// Maps the local coordinates (a, b, c) to a * first + b * second + c * axis.
  [[nodiscard]] Vec3 to_world(double a, double b, double c) const noexcept {
    return first * a + second * b + axis * c;
  }
};

/// Great-circle distance arccos<a, b> in [0, pi]; computed via atan2 for accuracy
/// near 0 and pi.
[[nodiscard]] double geodesic_distance(const UnitVector3& a, const UnitVector3& b) noexcept;

/// |sin r| / r with r the geodesic distance; 1 at r = 0. Throws ConfigError
/// when r = pi, where the reciprocal used by the density estimator is singular.
[[nodiscard]] double volume_density(const UnitVector3& eta, const UnitVector3& xi);

/// Closed axis-aligned cube origin + [0, side]^3. side == 0 is a single point.
class Cube {
public:
  Cube() = default;
  Cube(const Vec3& origin, double side);
  /// [0, side]^3
  explicit Cube(double side) : Cube(Vec3{}, side) {}

  [[nodiscard]] const Vec3& origin() const noexcept { return origin_; }
  [[nodiscard]] double side() const noexcept { return side_; }
  [[nodiscard]] Vec3 upper() const noexcept { return origin_ + Vec3{side_, side_, side_}; }
  [[nodiscard]] double volume() const noexcept { return side_ * side_ * side_; }
  [[nodiscard]] Vec3 center() const noexcept {
    return origin_ + Vec3{0.5 * side_, 0.5 * side_, 0.5 * side_};
  }

  [[nodiscard]] bool contains(const Vec3& p) const noexcept;
  [[nodiscard]] bool contains(const Cube& other) const noexcept;
  [[nodiscard]] bool intersects(const Cube& other) const noexcept;

  [[nodiscard]] Cube translated(const Vec3& shift) const { return Cube(origin_ + shift, side_); }

  friend bool operator==(const Cube&, const Cube&) = default;

private:
  Vec3 origin_{};
  double side_{0.0};
};

/// Axis-aligned box; the intersection of two cubes is in general not a cube.
struct Box {
  Vec3 lower;
  Vec3 upper;

  [[nodiscard]] double volume() const noexcept;
  [[nodiscard]] bool contains(const Vec3& p) const noexcept;
  [[nodiscard]] bool empty() const noexcept;
};

[[nodiscard]] Box to_box(const Cube& c) noexcept;
[[nodiscard]] Box intersect(const Box& a, const Box& b) noexcept;

/// Erosion {x : x + structuring ⊆ outer}. For cubes the result is the cube
/// outer.origin - structuring.origin + [0, w - b]^3; empty when b > w.
[[nodiscard]] std::optional<Cube> erode(const Cube& outer, const Cube& structuring);

/// Minkowski sum {a + s}: origin inner.origin + structuring.origin, side a + b.
[[nodiscard]] Cube dilate(const Cube& inner, const Cube& structuring);

/// Points bounds.origin + mesh * (i, j, k) lying in the closed cube, in
/// lexicographic order (x slowest).
class Lattice {
public:
  Lattice(const Cube& bounds, double mesh);

  [[nodiscard]] const Cube& bounds() const noexcept { return bounds_; }
  [[nodiscard]] double mesh() const noexcept { return mesh_; }
  /// Points per axis.
  [[nodiscard]] std::size_t per_axis() const noexcept { return per_axis_; }
  [[nodiscard]] std::size_t size() const noexcept { return per_axis_ * per_axis_ * per_axis_; }
  [[nodiscard]] Vec3 point(std::size_t index) const noexcept;
  [[nodiscard]] std::vector<Vec3> points() const;

private:
  Cube bounds_;
  double mesh_;
  std::size_t per_axis_;
};

/// Quadrature nodes with positive weights summing to 4 pi.
///
/// The default construction splits the sphere into latitude bands of equal
/// area (uniform in z = cos theta), and each band into cells of equal width in
/// azimuth; the node is the cell center in (z, phi) and its weight the exact
/// cell area. The same partition doubles as a binning of S^2 for
/// goodness-of-fit tests.
class SphereGrid {
public:
  /// `bands` latitude bands; the cell count per band is about 2 * bands * sin(theta).
  static SphereGrid equal_area(std::size_t bands);
  /// The grid used when no grid is specified (40 bands, about 2500 nodes).
  static SphereGrid standard();

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::span<const UnitVector3> nodes() const noexcept { return nodes_; }
  [[nodiscard]] std::span<const double> weights() const noexcept { return weights_; }
  [[nodiscard]] std::size_t bands() const noexcept { return band_offset_.size() - 1; }

  /// Index of the cell containing `u`.
  [[nodiscard]] std::size_t cell_index(const UnitVector3& u) const noexcept;
  /// z-range and azimuth range of cell `index`.
  struct CellBounds {
    double z_upper;
    double z_lower;
    double phi_begin;
    double phi_end;
  };
  [[nodiscard]] CellBounds cell_bounds(std::size_t index) const noexcept;

private:
  std::vector<UnitVector3> nodes_;
  std::vector<double> weights_;
  std::vector<std::size_t> band_offset_;  // size bands + 1
};

/// sum_i weight_i * fn(node_i)
[[nodiscard]] double sphere_integrate(const std::function<double(const UnitVector3&)>& fn,
                                      const SphereGrid& grid);

}  // namespace fibrescan

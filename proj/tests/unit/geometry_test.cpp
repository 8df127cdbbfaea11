#include <cmath>

#include <gtest/gtest.h>

#include "fibrescan/error.hpp"
#include "fibrescan/geometry.hpp"
#include "fibrescan/random.hpp"

using namespace fibrescan;

namespace {

UnitVector3 random_direction(RandomStream& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * kPi);
  const double s = std::sqrt(1.0 - z * z);
  return UnitVector3::normalized({s * std::cos(phi), s * std::sin(phi), z});
}

}  // namespace

TEST(UnitVector, RejectsNonUnitInput) {
  EXPECT_THROW(UnitVector3(1.0, 1.0, 0.0), ConfigError);
  EXPECT_THROW(UnitVector3::normalized({0.0, 0.0, 0.0}), ConfigError);
  EXPECT_THROW(UnitVector3::normalized({NAN, 0.0, 1.0}), ConfigError);
  EXPECT_NO_THROW(UnitVector3(0.6, 0.8, 0.0));
}

TEST(UnitVector, CheckedToleranceRenormalizes) {
  const auto u = UnitVector3::checked({0.0, 0.0, 1.0 + 5e-7}, 1e-6);
  EXPECT_DOUBLE_EQ(u.z(), 1.0);
  EXPECT_THROW((void)UnitVector3::checked({0.0, 0.0, 1.0 + 5e-6}, 1e-6), ConfigError);
}

TEST(UnitVector, SphericalCoordinatesRoundTrip) {
  RandomStream rng(7);
  for (int i = 0; i < 200; ++i) {
    const double theta = rng.uniform(0.01, kPi - 0.01);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const auto u = UnitVector3::from_spherical(theta, phi);
    EXPECT_NEAR(u.polar_angle(), theta, 1e-12);
    EXPECT_NEAR(u.azimuth(), phi, 1e-12);
  }
}

TEST(Frame, IsOrthonormalWithRequestedAxis) {
  RandomStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto axis = random_direction(rng);
    const Frame f(axis);
    EXPECT_NEAR(dot(f.first, f.second), 0.0, 1e-12);
    EXPECT_NEAR(dot(f.first, f.axis), 0.0, 1e-12);
    EXPECT_NEAR(norm(f.first), 1.0, 1e-12);
    EXPECT_NEAR(norm(f.second), 1.0, 1e-12);
    EXPECT_NEAR(norm(f.axis - axis.vec()), 0.0, 1e-12);
    // right-handed
    EXPECT_NEAR(norm(cross(f.first, f.second) - f.axis), 0.0, 1e-12);
  }
}

TEST(GeodesicDistance, MatchesArccosAwayFromEndpoints) {
  RandomStream rng(11);
  for (int i = 0; i < 500; ++i) {
    const auto a = random_direction(rng);
    const auto b = random_direction(rng);
    EXPECT_NEAR(geodesic_distance(a, b), std::acos(dot(a, b)), 1e-9);
  }
}

TEST(GeodesicDistance, AccurateForTinyAngles) {
  const double eps = 1e-9;
  const auto a = UnitVector3::e3();
  const auto b = UnitVector3::from_spherical(eps, 0.3);
  EXPECT_NEAR(geodesic_distance(a, b) / eps, 1.0, 1e-6);
  EXPECT_NEAR(geodesic_distance(a, -a), kPi, 1e-15);
}

TEST(VolumeDensity, SincOfDistance) {
  const auto a = UnitVector3::e3();
  EXPECT_DOUBLE_EQ(volume_density(a, a), 1.0);
  const double r = 1.1;
  EXPECT_NEAR(volume_density(a, UnitVector3::from_spherical(r, 2.0)), std::sin(r) / r, 1e-14);
  EXPECT_THROW((void)volume_density(a, -a), ConfigError);
}

TEST(Cube, ContainmentIsClosed) {
  const Cube c({1.0, 2.0, 3.0}, 2.0);
  EXPECT_TRUE(c.contains(Vec3{1.0, 2.0, 3.0}));
  EXPECT_TRUE(c.contains(Vec3{3.0, 4.0, 5.0}));
  EXPECT_FALSE(c.contains(Vec3{3.0 + 1e-12, 4.0, 5.0}));
  EXPECT_TRUE(c.contains(Cube({1.5, 2.5, 3.5}, 1.5)));
  EXPECT_FALSE(c.contains(Cube({1.5, 2.5, 3.5}, 1.6)));
  EXPECT_TRUE(c.intersects(Cube({3.0, 4.0, 5.0}, 1.0)));
  EXPECT_FALSE(c.intersects(Cube({3.1, 4.0, 5.0}, 1.0)));
  EXPECT_THROW(Cube(-1.0), ConfigError);
}

TEST(Cube, ErosionAndDilation) {
  const Cube w(7.0);
  const Cube b(1.0);
  const auto e = erode(w, b);
  ASSERT_TRUE(e.has_value());
  EXPECT_EQ(*e, Cube(6.0));
  // every translate by a point of the erosion fits, and the corner beyond does not
  EXPECT_TRUE(w.contains(b.translated(e->upper())));
  EXPECT_FALSE(w.contains(b.translated(e->upper() + Vec3{1e-9, 0.0, 0.0})));
  EXPECT_FALSE(erode(Cube(1.0), Cube(2.0)).has_value());
  EXPECT_EQ(erode(Cube(2.0), Cube(2.0))->side(), 0.0);

  const Cube a({15.0, 15.0, 15.0}, 5.0);
  const Cube d = dilate(a, Cube({-2.0, -2.0, -2.0}, 2.0));
  EXPECT_EQ(d, Cube({13.0, 13.0, 13.0}, 7.0));
}

TEST(Box, IntersectionAndVolume) {
  const Box a = to_box(Cube(2.0));
  const Box b = to_box(Cube({1.0, 1.0, 1.0}, 2.0));
  const Box c = intersect(a, b);
  EXPECT_DOUBLE_EQ(c.volume(), 1.0);
  EXPECT_TRUE(intersect(a, to_box(Cube({3.0, 0.0, 0.0}, 1.0))).empty());
}

TEST(Lattice, CountsAndOrder) {
  const Lattice l(Cube({1.0, 0.0, 0.0}, 1.0), 0.5);
  ASSERT_EQ(l.per_axis(), 3u);
  ASSERT_EQ(l.size(), 27u);
  EXPECT_EQ(l.point(0), (Vec3{1.0, 0.0, 0.0}));
  EXPECT_EQ(l.point(1), (Vec3{1.0, 0.0, 0.5}));
  EXPECT_EQ(l.point(9), (Vec3{1.5, 0.0, 0.0}));
  EXPECT_EQ(l.point(26), (Vec3{2.0, 1.0, 1.0}));

  // 130 points over [0, 65] as in a scan over W ⊖ B with W = 70, b = 5
  EXPECT_EQ(Lattice(Cube(65.0), 65.0 / 129.0).per_axis(), 130u);
  // a mesh that does not divide the side stops inside the cube
  const Lattice odd(Cube(1.0), 0.3);
  EXPECT_EQ(odd.per_axis(), 4u);
  EXPECT_TRUE(odd.bounds().contains(odd.point(odd.size() - 1)));
  EXPECT_EQ(Lattice(Cube({2.0, 2.0, 2.0}, 0.0), 0.5).size(), 1u);
}

TEST(SphereGrid, WeightsAreAreas) {
  for (const std::size_t bands : {2u, 7u, 40u, 200u}) {
    const auto g = SphereGrid::equal_area(bands);
    double total = 0.0;
    for (const double w : g.weights()) {
      EXPECT_GT(w, 0.0);
      total += w;
    }
    EXPECT_NEAR(total, kFourPi, 1e-10) << bands;
  }
}

TEST(SphereGrid, IntegratesLowOrderPolynomials) {
  const auto g = SphereGrid::equal_area(100);
  // int z^2 = 4 pi / 3, int x^2 y^2 = 4 pi / 15; midpoint error in z is O(bands^-2)
  EXPECT_NEAR(sphere_integrate([](const UnitVector3& u) { return u.z() * u.z(); }, g),
              kFourPi / 3.0, 1e-3);
  EXPECT_NEAR(sphere_integrate([](const UnitVector3& u) { return u.x() * u.x() * u.y() * u.y(); },
                               g),
              kFourPi / 15.0, 1e-3);
  EXPECT_NEAR(sphere_integrate([](const UnitVector3& u) { return u.x() + u.y() * u.z(); }, g), 0.0,
              1e-10);
}

TEST(SphereGrid, CellIndexContainsNode) {
  const auto g = SphereGrid::equal_area(25);
  for (std::size_t i = 0; i < g.size(); ++i) {
    ASSERT_EQ(g.cell_index(g.nodes()[i]), i);
    const auto cb = g.cell_bounds(i);
    const double area = (cb.z_upper - cb.z_lower) * (cb.phi_end - cb.phi_begin);
    EXPECT_NEAR(area, g.weights()[i], 1e-12);
  }
  RandomStream rng(5);
  for (int k = 0; k < 1000; ++k) {
    const auto u = random_direction(rng);
    const auto cb = g.cell_bounds(g.cell_index(u));
    EXPECT_LE(u.z(), cb.z_upper + 1e-12);
    EXPECT_GE(u.z(), cb.z_lower - 1e-12);
  }
}

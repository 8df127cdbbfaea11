#include "fibrescan/process.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>

#include "fibrescan/error.hpp"
#include "fibrescan/parallel.hpp"

namespace fibrescan {

namespace {

constexpr double kDirectionTolerance = 1e-6;
constexpr double kPointsPerBlock = 2e5;

double squared_distance_to_box(const Vec3& p, const Box& box) noexcept {
  double d2 = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double lo = box.lower[i];
    const double hi = box.upper[i];
    const double v = p[i];
    if (v < lo) d2 += (lo - v) * (lo - v);
    if (v > hi) d2 += (v - hi) * (v - hi);
  }
  return d2;
}

bool regions_overlap(const Region& a, const Region& b) {
  if (const auto* ca = std::get_if<Cube>(&a)) {
    if (const auto* cb = std::get_if<Cube>(&b)) {
      return intersect(to_box(*ca), to_box(*cb)).volume() > 0.0;
    }
    const auto& bb = std::get<Ball>(b);
    return squared_distance_to_box(bb.center, to_box(*ca)) < bb.radius * bb.radius;
  }
  const auto& ba = std::get<Ball>(a);
  if (const auto* cb = std::get_if<Cube>(&b)) {
    return squared_distance_to_box(ba.center, to_box(*cb)) < ba.radius * ba.radius;
  }
  const auto& bb = std::get<Ball>(b);
  const Vec3 d = ba.center - bb.center;
  return dot(d, d) < (ba.radius + bb.radius) * (ba.radius + bb.radius);
}

void validate_window(const Cube& window, double intensity, const SimulationOptions& options) {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw ConfigError("intensity must be positive and finite");
  }
  if (!(window.volume() > 0.0)) throw ConfigError("simulation window is empty");
  const double expected = intensity * window.volume();
  if (expected > options.max_expected_points) {
    throw ConfigError("expected point count " + std::to_string(expected) +
                      " exceeds the memory guard " + std::to_string(options.max_expected_points));
  }
}

bool lexicographic_less(const MarkedPoint& a, const MarkedPoint& b) noexcept {
  return std::tie(a.location.x, a.location.y, a.location.z) <
         std::tie(b.location.x, b.location.y, b.location.z);
}

/// Blocks of the window, each simulated from its own child stream.
template <class MarkFn>
std::vector<MarkedPoint> simulate_points(const Cube& window, double intensity,
                                         const RandomStream& rng,
                                         const SimulationOptions& options, MarkFn&& mark_for) {
  std::size_t blocks = options.blocks_per_axis;
  if (blocks == 0) {
    const double expected = intensity * window.volume();
    blocks = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(std::cbrt(expected / kPointsPerBlock))));
  }
  const double side = window.side() / static_cast<double>(blocks);
  const std::size_t total = blocks * blocks * blocks;
  std::vector<std::vector<MarkedPoint>> parts(total);
  const RandomStream base = rng.split("simulate");
  parallel_for(total, options.threads, [&](std::size_t b) {
    RandomStream stream = base.split(static_cast<std::uint64_t>(b));
    const std::size_t k = b % blocks;
    const std::size_t j = (b / blocks) % blocks;
    const std::size_t i = b / (blocks * blocks);
    const Vec3 lower = window.origin() + Vec3{side * static_cast<double>(i),
                                              side * static_cast<double>(j),
                                              side * static_cast<double>(k)};
    const auto n = stream.poisson(intensity * side * side * side);
    auto& part = parts[b];
    part.reserve(n);
    for (std::uint64_t p = 0; p < n; ++p) {
      Vec3 loc{lower.x + side * stream.uniform(), lower.y + side * stream.uniform(),
               lower.z + side * stream.uniform()};
      // Rounding of lower + side * u can step past the window's upper face.
      const Vec3 hi = window.upper();
      loc = {std::min(loc.x, hi.x), std::min(loc.y, hi.y), std::min(loc.z, hi.z)};
      part.push_back({loc, mark_for(loc, stream)});
    }
  });
  std::size_t count = 0;
  for (const auto& part : parts) count += part.size();
  std::vector<MarkedPoint> points;
  points.reserve(count);
  for (auto& part : parts) points.insert(points.end(), part.begin(), part.end());
  std::sort(points.begin(), points.end(), lexicographic_less);
  return points;
}

}  // namespace

bool region_contains(const Region& region, const Vec3& p) noexcept {
  if (const auto* c = std::get_if<Cube>(&region)) return c->contains(p);
  const auto& b = std::get<Ball>(region);
  const Vec3 d = p - b.center;
  return dot(d, d) <= b.radius * b.radius;
}

bool region_contains(const Region& region, const Cube& cube) noexcept {
  if (const auto* c = std::get_if<Cube>(&region)) return c->contains(cube);
  // A ball is convex: it contains the cube iff it contains all eight corners.
  const Vec3 lo = cube.origin();
  const double s = cube.side();
  for (int corner = 0; corner < 8; ++corner) {
    const Vec3 p{lo.x + ((corner & 1) ? s : 0.0), lo.y + ((corner & 2) ? s : 0.0),
                 lo.z + ((corner & 4) ? s : 0.0)};
    if (!region_contains(region, p)) return false;
  }
  return true;
}

bool region_intersects(const Region& region, const Cube& cube) noexcept {
  if (const auto* c = std::get_if<Cube>(&region)) return c->intersects(cube);
  const auto& b = std::get<Ball>(region);
  return squared_distance_to_box(b.center, to_box(cube)) <= b.radius * b.radius;
}

Box bounding_box(const Region& region) noexcept {
  if (const auto* c = std::get_if<Cube>(&region)) return to_box(*c);
  const auto& b = std::get<Ball>(region);
  const Vec3 r{b.radius, b.radius, b.radius};
  return {b.center - r, b.center + r};
}

double region_volume(const Region& region) noexcept {
  if (const auto* c = std::get_if<Cube>(&region)) return c->volume();
  const double r = std::get<Ball>(region).radius;
  return 4.0 / 3.0 * kPi * r * r * r;
}

FibreSystem::FibreSystem(const Cube& window, double intensity, std::vector<MarkedPoint> points,
                         std::optional<double> fibre_length)
    : window_(window),
      intensity_(intensity),
      points_(std::move(points)),
      fibre_length_(fibre_length) {
  if (!(intensity > 0.0) || !std::isfinite(intensity)) {
    throw ConfigError("FibreSystem: intensity must be positive");
  }
  if (fibre_length && !(*fibre_length > 0.0)) {
    throw ConfigError("FibreSystem: fibre length must be positive");
  }
  for (const auto& p : points_) {
    if (!window_.contains(p.location)) {
      throw ConfigError("FibreSystem: point outside the observation window");
    }
  }
}

FibreSystem FibreSystem::with_fibre_length(double length) const {
  return FibreSystem(window_, intensity_, points_, length);
}

FibreSystem simulate_homogeneous(const Cube& window, double intensity,
                                 const DirectionalModel& model, const RandomStream& rng,
                                 const SimulationOptions& options) {
  validate_window(window, intensity, options);
  auto points = simulate_points(window, intensity, rng, options,
                                [&model](const Vec3&, RandomStream& s) { return model.sample(s); });
  return FibreSystem(window, intensity, std::move(points));
}

FibreSystem simulate_with_inhomogeneity(const Cube& window, double intensity,
                                        const InhomogeneitySpec& spec, const RandomStream& rng,
                                        const SimulationOptions& options) {
  validate_window(window, intensity, options);
  const Box wbox = to_box(window);
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    const Box rb = bounding_box(spec.regions[i]);
    if (!wbox.contains(rb.lower) || !wbox.contains(rb.upper)) {
      throw ConfigError("inhomogeneity region " + std::to_string(i) + " leaves the window");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (regions_overlap(spec.regions[i], spec.regions[j])) {
        throw ConfigError("inhomogeneity regions " + std::to_string(j) + " and " +
                          std::to_string(i) + " overlap");
      }
    }
  }
  auto points = simulate_points(window, intensity, rng, options,
                                [&spec](const Vec3& loc, RandomStream& s) {
                                  for (const auto& region : spec.regions) {
                                    if (region_contains(region, loc)) return spec.inside.sample(s);
                                  }
                                  return spec.outside.sample(s);
                                });
  return FibreSystem(window, intensity, std::move(points));
}

FibreSystem restrict(const FibreSystem& system, const Cube& sub) {
  std::vector<MarkedPoint> kept;
  for (const auto& p : system.points()) {
    if (sub.contains(p.location)) kept.push_back(p);
  }
  return FibreSystem(sub, system.intensity(), std::move(kept), system.fibre_length());
}

std::size_t count_in(const FibreSystem& system, const Cube& cube) noexcept {
  return static_cast<std::size_t>(
      std::count_if(system.points().begin(), system.points().end(),
                    [&cube](const MarkedPoint& p) { return cube.contains(p.location); }));
}

double estimate_intensity(const FibreSystem& system) {
  if (!(system.window().volume() > 0.0)) throw NumericalError("window has zero volume");
  return static_cast<double>(system.size()) / system.window().volume();
}

std::vector<Segment> fibre_segments(const FibreSystem& system) {
  if (!system.fibre_length()) throw ConfigError("fibre_segments: fibre length is not set");
  const double half = 0.5 * *system.fibre_length();
  std::vector<Segment> out;
  out.reserve(system.size());
  for (const auto& p : system.points()) {
    const Vec3 d = p.mark.vec() * half;
    out.push_back({p.location - d, p.location + d});
  }
  return out;
}

double volume_fraction(const FibreSystem& system, double fibre_radius) {
  if (!system.fibre_length()) throw ConfigError("volume_fraction: fibre length is not set");
  return static_cast<double>(system.size()) * kPi * fibre_radius * fibre_radius *
         *system.fibre_length() / system.window().volume();
}

void write_point_cloud(const FibreSystem& system, std::ostream& out) {
  out << "x,y,z,dx,dy,dz\n";
  std::array<char, 32> buf{};
  auto put = [&](double v, char sep) {
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.write(buf.data(), res.ptr - buf.data());
    out.put(sep);
  };
  for (const auto& p : system.points()) {
    put(p.location.x, ',');
    put(p.location.y, ',');
    put(p.location.z, ',');
    put(p.mark.x(), ',');
    put(p.mark.y(), ',');
    put(p.mark.z(), '\n');
  }
  if (!out) throw IoError("failed to write point cloud");
}

FibreSystem read_point_cloud(std::istream& in, const Cube& window, double intensity,
                             std::optional<double> fibre_length) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("point cloud: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,z,dx,dy,dz") throw IoError("point cloud: unexpected header '" + line + "'");
  std::vector<MarkedPoint> points;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 6> v{};
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t k = 0; k < 6; ++k) {
      const auto res = std::from_chars(cur, end, v[k]);
      if (res.ec != std::errc()) {
        throw IoError("point cloud: bad number on row " + std::to_string(row));
      }
      cur = res.ptr;
      if (k < 5) {
        if (cur == end || *cur != ',') {
          throw IoError("point cloud: expected 6 columns on row " + std::to_string(row));
        }
        ++cur;
      }
    }
    if (cur != end) throw IoError("point cloud: trailing data on row " + std::to_string(row));
    const Vec3 loc{v[0], v[1], v[2]};
    if (!window.contains(loc)) {
      throw IoError("point cloud: row " + std::to_string(row) + " lies outside the window");
    }
    try {
      points.push_back({loc, UnitVector3::checked({v[3], v[4], v[5]}, kDirectionTolerance)});
    } catch (const ConfigError& e) {
      throw IoError("point cloud: row " + std::to_string(row) + ": " + e.what());
    }
  }
  return FibreSystem(window, intensity, std::move(points), fibre_length);
}

}  // namespace fibrescan

// kernel.hpp -- compactly supported kernels and their spherical weights.
#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "fibrescan/geometry.hpp"

namespace fibrescan {

enum class KernelType { Uniform, Epanechnikov, Biweight, Triweight, Tricube, Triangular };

inline constexpr std::array<KernelType, 6> kAllKernels = {
    KernelType::Biweight, KernelType::Epanechnikov, KernelType::Triangular,
    KernelType::Tricube,  KernelType::Triweight,    KernelType::Uniform};

/// How the constant in front of the shape is chosen.
///   Spherical: 2 pi int_0^1 t K(t) dt = 1, so every summand of the spherical
///              density estimator carries unit mass on S^2.
///   Linear:    int_{-1}^{1} K(|t|) dt = 1, the textbook constants for kernels
///              on the real line (1/2, 3/4, 15/16, 35/32, 70/81, 1).
enum class KernelNormalization { Spherical, Linear };

class Kernel {
public:
  explicit Kernel(KernelType type = KernelType::Tricube,
                  KernelNormalization normalization = KernelNormalization::Spherical);

  [[nodiscard]] KernelType type() const noexcept { return type_; }
  [[nodiscard]] KernelNormalization normalization() const noexcept { return normalization_; }
  [[nodiscard]] double constant() const noexcept { return constant_; }

  /// Unnormalized polynomial shape, evaluated without the support cutoff.
  [[nodiscard]] double shape(double t) const noexcept;
  /// c * shape(t) on [0, 1], 0 for t > 1.
  [[nodiscard]] double operator()(double t) const noexcept {
    return (t >= 0.0 && t <= 1.0) ? constant_ * shape(t) : 0.0;
  }

private:
  KernelType type_;
  KernelNormalization normalization_;
  double constant_;
};

[[nodiscard]] inline double kernel_eval(const Kernel& kernel, double t) { return kernel(t); }

[[nodiscard]] std::string to_string(KernelType type);
/// Case-insensitive; accepts the names produced by to_string. Throws ConfigError.
[[nodiscard]] KernelType parse_kernel(std::string_view name);

/// ((1 + vol) / vol^(10/9))^(1/4), clamped into (0, pi).
[[nodiscard]] double default_bandwidth(double window_volume);

/// Per-summand weight K(d_g(eta, xi) / h) / (h^2 theta_eta(xi)) of the
/// spherical kernel density estimator.
///
/// The weight depends on the pair only through the half chord
/// u = |eta - xi| / 2 = sin(d_g / 2), in which it is analytic on [0, sin(h/2)].
/// It is tabulated in u and evaluated by 4-point Lagrange interpolation
/// (relative error below 1e-12), which avoids an arccos per pair. Past
/// d_g = 2 the branch point at u = 1 spoils interpolation, so such pairs
/// (only possible for h > 2) are evaluated directly.
class SphericalKernel {
public:
  /// Requires 0 < bandwidth < pi.
  SphericalKernel(const Kernel& kernel, double bandwidth);

  [[nodiscard]] const Kernel& kernel() const noexcept { return kernel_; }
  [[nodiscard]] double bandwidth() const noexcept { return bandwidth_; }
  /// Squared chord length |eta - xi|^2 at geodesic distance h.
  [[nodiscard]] double cutoff_chord2() const noexcept { return cutoff_chord2_; }

  /// 0 whenever d_g(eta, xi) >= h.
  [[nodiscard]] double weight(const Vec3& eta, const Vec3& xi) const noexcept {
    const double dx = eta.x - xi.x;
    const double dy = eta.y - xi.y;
    const double dz = eta.z - xi.z;
    return weight_from_chord2(dx * dx + dy * dy + dz * dz);
  }
  [[nodiscard]] double weight(const UnitVector3& eta, const UnitVector3& xi) const noexcept {
    return weight(eta.vec(), xi.vec());
  }
  [[nodiscard]] double weight_from_chord2(double chord2) const noexcept {
    if (!(chord2 < cutoff_chord2_)) return 0.0;
    if (chord2 > kDirectChord2) return exact_weight(2.0 * std::asin(0.5 * std::sqrt(chord2)));
    return interpolate(0.5 * std::sqrt(chord2));
  }

  /// Direct evaluation K(r / h) r / (h^2 sin r) at geodesic distance r.
  [[nodiscard]] double exact_weight(double r) const noexcept;

private:
  // chord^2 at geodesic distance 2: 4 sin^2(1)
  static constexpr double kDirectChord2 = 2.8322936730942848;

  [[nodiscard]] double interpolate(double u) const noexcept {
    const double x = u * inv_step_;
    // Stencil of 4 nodes s..s+3 around x, shifted inwards at the table ends.
    auto s = static_cast<std::ptrdiff_t>(x) - 1;
    s = s < 0 ? 0 : (s > last_stencil_ ? last_stencil_ : s);
    const double t = x - static_cast<double>(s);
    const double* f = table_.data() + s;
    const double t1 = t - 1.0;
    const double t2 = t - 2.0;
    const double t3 = t - 3.0;
    constexpr double kSixth = 1.0 / 6.0;
    return kSixth * (t * t1 * t2 * f[3] - t1 * t2 * t3 * f[0]) +
           0.5 * t * t3 * (t2 * f[1] - t1 * f[2]);
  }

  Kernel kernel_;
  double bandwidth_;
  double cutoff_chord2_;
  double step_;
  double inv_step_;
  std::ptrdiff_t last_stencil_;
  std::vector<double> table_;
};

}  // namespace fibrescan

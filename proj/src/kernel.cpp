#include "fibrescan/kernel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fibrescan/error.hpp"

namespace fibrescan {

namespace {

constexpr std::size_t kTableIntervals = 2048;

/// int_0^1 t * shape(t) dt, in closed form.
double first_moment(KernelType type) noexcept {
  switch (type) {
    case KernelType::Uniform:
      return 1.0 / 2.0;
    case KernelType::Epanechnikov:
      return 1.0 / 4.0;
    case KernelType::Biweight:
      return 1.0 / 6.0;
    case KernelType::Triweight:
      return 1.0 / 8.0;
    case KernelType::Tricube:
      return 81.0 / 440.0;  // 1/2 - 3/5 + 3/8 - 1/11
    case KernelType::Triangular:
      return 1.0 / 6.0;
  }
  return 1.0;
}

/// int_0^1 shape(t) dt, in closed form.
double zeroth_moment(KernelType type) noexcept {
  switch (type) {
    case KernelType::Uniform:
      return 1.0;
    case KernelType::Epanechnikov:
      return 2.0 / 3.0;
    case KernelType::Biweight:
      return 8.0 / 15.0;
    case KernelType::Triweight:
      return 16.0 / 35.0;
    case KernelType::Tricube:
      return 81.0 / 140.0;
    case KernelType::Triangular:
      return 1.0 / 2.0;
  }
  return 1.0;
}

}  // namespace

Kernel::Kernel(KernelType type, KernelNormalization normalization)
    : type_(type), normalization_(normalization) {
  constant_ = normalization == KernelNormalization::Spherical
                  ? 1.0 / (2.0 * kPi * first_moment(type))
                  : 1.0 / (2.0 * zeroth_moment(type));
}

double Kernel::shape(double t) const noexcept {
  switch (type_) {
    case KernelType::Uniform:
      return 1.0;
    case KernelType::Epanechnikov:
      return 1.0 - t * t;
    case KernelType::Biweight: {
      const double a = 1.0 - t * t;
      return a * a;
    }
    case KernelType::Triweight: {
      const double a = 1.0 - t * t;
      return a * a * a;
    }
    case KernelType::Tricube: {
      const double a = 1.0 - t * t * t;
      return a * a * a;
    }
    case KernelType::Triangular:
      return 1.0 - t;
  }
  return 0.0;
}

std::string to_string(KernelType type) {
  switch (type) {
    case KernelType::Uniform:
      return "Uniform";
    case KernelType::Epanechnikov:
      return "Epanechnikov";
    case KernelType::Biweight:
      return "Biweight";
    case KernelType::Triweight:
      return "Triweight";
    case KernelType::Tricube:
      return "Tricube";
    case KernelType::Triangular:
      return "Triangular";
  }
  return "Unknown";
}

KernelType parse_kernel(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto type : kAllKernels) {
    std::string candidate = to_string(type);
    std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (candidate == lower) return type;
  }
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

double default_bandwidth(double window_volume) {
  if (!(window_volume > 0.0)) throw ConfigError("default_bandwidth: volume must be positive");
  const double h = std::pow((1.0 + window_volume) / std::pow(window_volume, 10.0 / 9.0), 0.25);
  return std::clamp(h, 1e-12, std::nextafter(kPi, 0.0));
}

SphericalKernel::SphericalKernel(const Kernel& kernel, double bandwidth)
    : kernel_(kernel), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0 && bandwidth < kPi)) {
    throw ConfigError("bandwidth must lie in (0, pi)");
  }
  const double u_max = std::sin(0.5 * bandwidth);
  cutoff_chord2_ = 4.0 * u_max * u_max;
  step_ = u_max / static_cast<double>(kTableIntervals);
  inv_step_ = 1.0 / step_;
  last_stencil_ = static_cast<std::ptrdiff_t>(kTableIntervals) - 3;
  table_.resize(kTableIntervals + 1);
  for (std::size_t k = 0; k <= kTableIntervals; ++k) {
    const double u = std::min(1.0, step_ * static_cast<double>(k));
    const double r = 2.0 * std::asin(u);
    // Smooth continuation of the weight up to and including r = h.
    double ratio = 1.0;  // r / sin r
    if (r > 1e-4) {
      ratio = r / std::sin(r);
    } else {
      ratio = 1.0 + r * r / 6.0;
    }
    table_[k] = kernel.constant() * kernel.shape(r / bandwidth) * ratio /
                (bandwidth * bandwidth);
  }
}

double SphericalKernel::exact_weight(double r) const noexcept {
  if (r >= bandwidth_) return 0.0;
  const double theta = r == 0.0 ? 1.0 : std::abs(std::sin(r)) / r;
  return kernel_(r / bandwidth_) / (bandwidth_ * bandwidth_ * theta);
}

}  // namespace fibrescan

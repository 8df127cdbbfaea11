#include "fibrescan/directional.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "fibrescan/error.hpp"

namespace fibrescan {

/// Tabulated CDF of s = |t| for the Watson law, density proportional to
/// exp(kappa (s^2 - 1)) on [0, 1].
class WatsonCdf {
public:
  explicit WatsonCdf(double kappa) : kappa_(kappa) {
    cumulative_.resize(kIntervals + 1, 0.0);
    for (std::size_t k = 0; k < kIntervals; ++k) {
      cumulative_[k + 1] = cumulative_[k] + integral(node(k), node(k + 1));
    }
  }

  /// int_0^1 exp(kappa (s^2 - 1)) ds
  [[nodiscard]] double total() const noexcept { return cumulative_.back(); }

  [[nodiscard]] double invert(double u) const {
    const double target = u * total();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        0, std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(kIntervals) - 1,
                                    (it - cumulative_.begin()) - 1)));
    double lo = node(k);
    double hi = node(k + 1);
    const double span = cumulative_[k + 1] - cumulative_[k];
    double s = span > 0.0 ? lo + (hi - lo) * (target - cumulative_[k]) / span : lo;
    const double base = node(k);
    for (int iter = 0; iter < 50; ++iter) {
      const double residual = cumulative_[k] + integral(base, s) - target;
      if (residual > 0.0) {
        hi = s;
      } else {
        lo = s;
      }
      const double step = residual / weight(s);
      double next = s - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - s) <= 1e-15) {
        s = next;
        break;
      }
      s = next;
    }
    return s;
  }

private:
  static constexpr std::size_t kIntervals = 512;

  [[nodiscard]] static double node(std::size_t k) noexcept {
    return static_cast<double>(k) / static_cast<double>(kIntervals);
  }
  [[nodiscard]] double weight(double s) const noexcept { return std::exp(kappa_ * (s * s - 1.0)); }
  [[nodiscard]] double integral(double a, double b) const {
    if (b <= a) return 0.0;
    return boost::math::quadrature::gauss<double, 10>::integrate(
        [this](double s) { return weight(s); }, a, b);
  }

  double kappa_;
  std::vector<double> cumulative_;
};

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(what) + " must be positive and finite");
  }
}

}  // namespace

DirectionalModel::DirectionalModel() : log_normalizer_(-std::log(kFourPi)) {}

DirectionalModel DirectionalModel::fisher(const UnitVector3& mean, double kappa) {
  require_positive(kappa, "Fisher concentration");
  DirectionalModel m;
  m.family_ = DirectionalFamily::Fisher;
  m.axis_ = mean;
  m.parameter_ = kappa;
  // kappa / (4 pi sinh kappa) * exp(kappa t) = kappa / (2 pi (1 - e^{-2 kappa})) * exp(kappa (t - 1))
  m.log_normalizer_ = std::log(kappa) - std::log(2.0 * kPi) - std::log1p(-std::exp(-2.0 * kappa));
  return m;
}

DirectionalModel DirectionalModel::watson(const UnitVector3& axis, double kappa) {
  require_positive(kappa, "Watson concentration");
  DirectionalModel m;
  m.family_ = DirectionalFamily::Watson;
  m.axis_ = axis;
  m.parameter_ = kappa;
  m.watson_ = std::make_shared<const WatsonCdf>(kappa);
  m.log_normalizer_ = -std::log(kFourPi * m.watson_->total());
  return m;
}

DirectionalModel DirectionalModel::schladitz(double beta, const UnitVector3& axis) {
  require_positive(beta, "Schladitz anisotropy");
  DirectionalModel m;
  m.family_ = DirectionalFamily::Schladitz;
  m.axis_ = axis;
  m.parameter_ = beta;
  m.log_normalizer_ = std::log(beta) - std::log(kFourPi);
  return m;
}

std::string DirectionalModel::name() const {
  if (family_ == DirectionalFamily::Uniform) return "Uniform";
  std::ostringstream os;
  os << to_string(family_) << '(' << parameter_ << ')';
  return os.str();
}

double DirectionalModel::log_density_at_cosine(double t) const noexcept {
  switch (family_) {
    case DirectionalFamily::Uniform:
      return log_normalizer_;
    case DirectionalFamily::Fisher:
      return log_normalizer_ + parameter_ * (t - 1.0);
    case DirectionalFamily::Watson:
      return log_normalizer_ + parameter_ * (t * t - 1.0);
    case DirectionalFamily::Schladitz:
      return log_normalizer_ - 1.5 * std::log1p((parameter_ * parameter_ - 1.0) * t * t);
  }
  return log_normalizer_;
}

double DirectionalModel::density_at_cosine(double t) const noexcept {
  return std::exp(log_density_at_cosine(t));
}

double DirectionalModel::density(const UnitVector3& x) const noexcept {
  return density_at_cosine(dot(axis_, x));
}

double DirectionalModel::log_density(const UnitVector3& x) const noexcept {
  return log_density_at_cosine(dot(axis_, x));
}

double DirectionalModel::sample_cosine(RandomStream& rng) const {
  switch (family_) {
    case DirectionalFamily::Uniform:
      return 2.0 * rng.uniform() - 1.0;
    case DirectionalFamily::Fisher: {
      const double u = rng.uniform_positive();
      const double k = parameter_;
      return std::clamp(1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * k)) / k, -1.0, 1.0);
    }
    case DirectionalFamily::Watson: {
      const double s = watson_->invert(rng.uniform());
      return rng.uniform() < 0.5 ? -s : s;
    }
    case DirectionalFamily::Schladitz: {
      const double v = 2.0 * rng.uniform() - 1.0;
      const double b2 = parameter_ * parameter_;
      return std::clamp(v / std::sqrt(b2 - v * v * (b2 - 1.0)), -1.0, 1.0);
    }
  }
  return 1.0;
}

UnitVector3 DirectionalModel::sample(RandomStream& rng) const {
  const double t = sample_cosine(rng);
  const double phi = 2.0 * kPi * rng.uniform();
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  const Frame frame(axis_);
  return UnitVector3::normalized(frame.to_world(s * std::cos(phi), s * std::sin(phi), t));
}

std::string to_string(DirectionalFamily family) {
  switch (family) {
    case DirectionalFamily::Uniform:
      return "Uniform";
    case DirectionalFamily::Fisher:
      return "Fisher";
    case DirectionalFamily::Watson:
      return "Watson";
    case DirectionalFamily::Schladitz:
      return "Schladitz";
  }
  return "Unknown";
}

double true_entropy(const DirectionalModel& model, const SphereGrid& grid) {
  if (model.family() == DirectionalFamily::Uniform) return std::log(kFourPi);
  return sphere_integrate(
      [&model](const UnitVector3& x) {
        const double lf = model.log_density(x);
        return -lf * std::exp(lf);
      },
      grid);
}

}  // namespace fibrescan

// directional.hpp -- axially symmetric directional distributions on S^2.
//
// All densities are with respect to the surface-area measure and depend on x
// only through t = <axis, x>:
//
//   Uniform          1 / (4 pi)
//   Fisher(kappa)    kappa exp(kappa t) / (4 pi sinh kappa)
//   Watson(kappa)    exp(kappa t^2) / (4 pi int_0^1 exp(kappa s^2) ds)
//   Schladitz(beta)  beta / (4 pi (1 + (beta^2 - 1) t^2)^(3/2))
//
// Sampling inverts the CDF of t (closed form except for Watson, which uses a
// tabulated CDF refined by Newton steps), draws a uniform azimuth and rotates
// e_3 onto the axis.
#pragma once

#include <memory>
#include <string>

#include "fibrescan/geometry.hpp"
#include "fibrescan/random.hpp"

namespace fibrescan {

enum class DirectionalFamily { Uniform, Fisher, Watson, Schladitz };

class WatsonCdf;

class DirectionalModel {
public:
  /// Uniform distribution.
  DirectionalModel();

  static DirectionalModel uniform() { return {}; }
  static DirectionalModel fisher(const UnitVector3& mean, double kappa);
  static DirectionalModel watson(const UnitVector3& axis, double kappa);
  static DirectionalModel schladitz(double beta, const UnitVector3& axis = UnitVector3::e3());

  [[nodiscard]] DirectionalFamily family() const noexcept { return family_; }
  [[nodiscard]] const UnitVector3& axis() const noexcept { return axis_; }
  /// kappa for Fisher/Watson, beta for Schladitz, 0 for Uniform.
  [[nodiscard]] double parameter() const noexcept { return parameter_; }
  /// "Uniform", "Fisher(2)", ...
  [[nodiscard]] std::string name() const;

  [[nodiscard]] double density(const UnitVector3& x) const noexcept;
  [[nodiscard]] double log_density(const UnitVector3& x) const noexcept;
  /// Density as a function of t = <axis, x> in [-1, 1].
  [[nodiscard]] double density_at_cosine(double t) const noexcept;
  [[nodiscard]] double log_density_at_cosine(double t) const noexcept;

  /// Draws t = <axis, xi> from its marginal law.
  [[nodiscard]] double sample_cosine(RandomStream& rng) const;
  [[nodiscard]] UnitVector3 sample(RandomStream& rng) const;

private:
  DirectionalFamily family_{DirectionalFamily::Uniform};
  UnitVector3 axis_{};
  double parameter_{0.0};
  double log_normalizer_{0.0};
  std::shared_ptr<const WatsonCdf> watson_;
};

[[nodiscard]] std::string to_string(DirectionalFamily family);

[[nodiscard]] inline double density_eval(const DirectionalModel& model, const UnitVector3& eta) {
  return model.density(eta);
}

[[nodiscard]] inline UnitVector3 sample_direction(const DirectionalModel& model,
                                                  RandomStream& rng) {
  return model.sample(rng);
}

/// -int f log f over S^2 by quadrature on `grid`; exactly log(4 pi) for Uniform.
[[nodiscard]] double true_entropy(const DirectionalModel& model, const SphereGrid& grid);

}  // namespace fibrescan

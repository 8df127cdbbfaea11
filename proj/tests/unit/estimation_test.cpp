#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fibrescan/error.hpp"
#include "fibrescan/estimation.hpp"
#include "fibrescan/process.hpp"

using namespace fibrescan;

namespace {

double weight(const SphericalKernel& k, const UnitVector3& a, const UnitVector3& b) {
  return k.exact_weight(std::acos(std::clamp(dot(a, b), -1.0, 1.0)));
}

// Entropy estimate written out from the definition: marks of `scored` in B,
// densities from `source` over (B' + Y) ∩ support, or over B without B'.
double brute_entropy(const FibreSystem& source, const FibreSystem& scored,
                     const EstimatorConfig& cfg) {
  const SphericalKernel k(cfg.kernel, cfg.bandwidth);
  const Box support = to_box(cfg.support_region());
  double sum = 0.0;
  for (const auto& p : scored.points()) {
    if (!cfg.window.contains(p.location)) continue;
    Box local = to_box(cfg.window);
    if (cfg.sub_window) local = intersect(to_box(cfg.sub_window->translated(p.location)), support);
    double f = 0.0;
    for (const auto& q : source.points()) {
      if (local.contains(q.location)) f += weight(k, p.mark, q.mark);
    }
    f /= cfg.intensity * local.volume();
    sum += std::log(std::max(f, kLogClamp));
  }
  return -sum / (cfg.intensity * cfg.window.volume());
}

EstimatorConfig base_config(double side, double lambda) {
  EstimatorConfig cfg;
  cfg.kernel = Kernel(KernelType::Tricube);
  cfg.bandwidth = 0.8;
  cfg.intensity = lambda;
  cfg.window = Cube({1.0, 1.0, 1.0}, side);
  cfg.evaluation = DensityEvaluation::Exact;
  return cfg;
}

FibreSystem rotated(const FibreSystem& s, const Frame& frame) {
  std::vector<MarkedPoint> pts;
  for (const auto& p : s.points()) {
    const Vec3 v = frame.to_world(p.mark.x(), p.mark.y(), p.mark.z());
    pts.push_back({p.location, UnitVector3::normalized(v)});
  }
  return FibreSystem(s.window(), s.intensity(), pts);
}

}  // namespace

TEST(EstimatorConfig, Validation) {
  auto cfg = base_config(4.0, 2.0);
  EXPECT_NO_THROW(cfg.validate());
  cfg.bandwidth = kPi;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = base_config(4.0, 0.0);
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = base_config(4.0, 1.0);
  cfg.sub_window = Cube(5.0);
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(DensityEstimate, NormalizedByWindowCount) {
  const auto s = simulate_homogeneous(Cube(6.0), 2.0, DirectionalModel::uniform(), RandomStream(1));
  auto cfg = base_config(4.0, 2.0);
  const SphericalKernel k(cfg.kernel, cfg.bandwidth);
  const auto eta = UnitVector3::normalized({1, 2, 3});
  double sum = 0.0;
  for (const auto& p : s.points()) {
    if (cfg.window.contains(p.location)) sum += weight(k, eta, p.mark);
  }
  EXPECT_NEAR(density_estimate(s, cfg, eta), sum / (2.0 * 64.0), 1e-12);
}

TEST(DensityEstimate, SupErrorAgainstTruth) {
  const auto s = simulate_homogeneous(Cube(10.0), 5.0, DirectionalModel::uniform(), RandomStream(2));
  auto cfg = base_config(9.0, 5.0);
  const auto grid = SphereGrid::equal_area(20);
  const auto f = window_density(s, cfg);
  std::vector<double> values;
  double worst = 0.0;
  for (const auto& n : grid.nodes()) {
    values.push_back(f(n));
    worst = std::max(worst, std::abs(f(n) - 1.0 / kFourPi));
  }
  EXPECT_NEAR(density_sup_error(s, cfg, DirectionalModel::uniform(), grid), worst, 1e-15);
  EXPECT_NEAR(density_sup_error(values, DirectionalModel::uniform(), grid), worst, 1e-15);
}

TEST(EntropyPlain, MatchesDefinition) {
  const auto s = simulate_homogeneous(Cube(7.0), 1.5, DirectionalModel::fisher(UnitVector3::e1(), 2.0),
                                      RandomStream(3));
  const auto cfg = base_config(5.0, 1.5);
  const auto e = entropy_plain(s, cfg);
  EXPECT_NEAR(e.value, brute_entropy(s, s, cfg), 1e-10);
  EXPECT_EQ(e.terms, count_in(s, cfg.window));
  EXPECT_FALSE(e.gridded);
}

TEST(EntropyPlain, LocalWindowsMatchDefinition) {
  const auto s = simulate_homogeneous(Cube(7.0), 3.0, DirectionalModel::uniform(), RandomStream(4));
  auto cfg = base_config(5.0, 3.0);
  cfg.sub_window = Cube(2.0);
  EXPECT_NEAR(entropy_plain(s, cfg).value, brute_entropy(s, s, cfg), 1e-10);
  // clipped to a larger support
  cfg.support = Cube(7.0);
  EXPECT_NEAR(entropy_plain(s, cfg).value, brute_entropy(s, s, cfg), 1e-10);
  // a sub-window with an offset origin
  cfg.sub_window = Cube({-1.0, -1.0, -1.0}, 2.0);
  EXPECT_NEAR(entropy_plain(s, cfg).value, brute_entropy(s, s, cfg), 1e-10);
}

TEST(EntropyModified, MatchesDefinition) {
  const auto model = DirectionalModel::schladitz(2.0);
  const auto original = simulate_homogeneous(Cube(8.0), 3.0, model, RandomStream(5));
  const auto copy = simulate_homogeneous(Cube(8.0), 3.0, model, RandomStream(6));
  auto cfg = base_config(5.0, 3.0);
  cfg.sub_window = Cube(2.0);
  cfg.support = Cube(8.0);
  const auto e = entropy_modified(original, copy, cfg);
  EXPECT_NEAR(e.value, brute_entropy(original, copy, cfg), 1e-10);
  EXPECT_FALSE(e.degenerate_copy);
  EXPECT_TRUE(entropy_modified(original, original, cfg).degenerate_copy);
}

TEST(EntropyModified, DisjointSupportIsClamped) {
  std::vector<MarkedPoint> a;
  std::vector<MarkedPoint> b;
  for (int i = 0; i < 20; ++i) {
    const Vec3 p{0.1 + 0.09 * i, 0.5, 0.5};
    a.push_back({p, UnitVector3::e3()});
    b.push_back({p, UnitVector3::e1()});
  }
  const FibreSystem original(Cube(2.0), 10.0, a);
  const FibreSystem copy(Cube(2.0), 10.0, b);
  auto cfg = base_config(2.0, 10.0);
  cfg.window = Cube(2.0);
  const auto e = entropy_modified(original, copy, cfg);
  EXPECT_EQ(e.clamped, 20u);
  EXPECT_TRUE(e.unreliable);
  EXPECT_NEAR(e.value, -20.0 * std::log(kLogClamp) / 80.0, 1e-12);
}

TEST(Entropy, EmptyWindowIsNumericalError) {
  const FibreSystem empty(Cube(3.0), 1.0, {});
  const auto cfg = base_config(2.0, 1.0);
  EXPECT_THROW((void)entropy_plain(empty, cfg), NumericalError);
  EXPECT_THROW((void)entropy_modified(empty, empty, cfg), NumericalError);
}

TEST(Entropy, IntensityScaling) {
  // E(c lambda) = E(lambda) / c + N log c / (c lambda vol B) for the same points
  const auto s = simulate_homogeneous(Cube(7.0), 2.0, DirectionalModel::uniform(), RandomStream(7));
  auto cfg = base_config(6.0, 2.0);
  const auto e1 = entropy_plain(s, cfg);
  for (const double c : {0.5, 3.0}) {
    auto scaled = cfg;
    scaled.intensity = 2.0 * c;
    const double predicted =
        e1.value / c + static_cast<double>(e1.terms) * std::log(c) / (c * 2.0 * 216.0);
    EXPECT_NEAR(entropy_plain(s, scaled).value, predicted, 1e-10) << c;
  }
}

TEST(Entropy, RotationInvariant) {
  const auto s = simulate_homogeneous(Cube(7.0), 2.0, DirectionalModel::fisher(UnitVector3::e3(), 4.0),
                                      RandomStream(8));
  auto cfg = base_config(6.0, 2.0);
  cfg.sub_window = Cube(3.0);
  const Frame frame(UnitVector3::normalized({0.3, -0.7, 0.2}));
  const auto r = rotated(s, frame);
  EXPECT_NEAR(entropy_plain(s, cfg).value, entropy_plain(r, cfg).value, 1e-6);
}

TEST(Entropy, GriddedAgreesWithExact) {
  const auto s = simulate_homogeneous(Cube(16.0), 5.0, DirectionalModel::schladitz(2.0),
                                      RandomStream(9));
  auto cfg = base_config(15.0, 5.0);
  cfg.window = Cube(16.0);
  cfg.bandwidth = default_bandwidth(cfg.window.volume());
  const auto exact = entropy_plain(s, cfg);
  cfg.evaluation = DensityEvaluation::Gridded;
  const auto gridded = entropy_plain(s, cfg);
  EXPECT_TRUE(gridded.gridded);
  EXPECT_NEAR(gridded.value, exact.value, 1e-4);
  cfg.evaluation = DensityEvaluation::Automatic;
  EXPECT_TRUE(entropy_plain(s, cfg).gridded);
}

TEST(Entropy, IndependentOfThreadCount) {
  const auto s = simulate_homogeneous(Cube(9.0), 3.0, DirectionalModel::uniform(), RandomStream(10));
  auto cfg = base_config(8.0, 3.0);
  cfg.sub_window = Cube(2.5);
  const auto a = entropy_plain(s, cfg);
  cfg.threads = 3;
  const auto b = entropy_plain(s, cfg);
  EXPECT_EQ(a.value, b.value);
  cfg.sub_window.reset();
  cfg.evaluation = DensityEvaluation::Gridded;
  const auto c = entropy_plain(s, cfg);
  cfg.threads = 1;
  EXPECT_EQ(entropy_plain(s, cfg).value, c.value);
}

TEST(CltNormalization, CenteringAndStatistic) {
  CltNormalization n;
  n.mean_neg_log_density = 2.5;
  n.variance = 0.04;
  EXPECT_DOUBLE_EQ(n.sigma(), 0.2);
  EXPECT_DOUBLE_EQ(n.centering(1000, 20.0, 50.0), 2.5);
  EXPECT_DOUBLE_EQ(n.centering(1100, 20.0, 50.0), 2.75);
  EXPECT_NEAR(standardized_statistic(2.6, 2.5, 0.2, 100.0), 5.0, 1e-12);
  n.variance = 0.0;
  EXPECT_THROW((void)n.sigma(), NumericalError);
}

TEST(CltNormalization, SmallRecipe) {
  auto cfg = base_config(6.0, 10.0);
  cfg.window = Cube(6.0);
  cfg.sub_window = Cube(2.0);
  CltRecipe recipe;
  recipe.replications = 30;
  recipe.covariance_nodes = 27;
  recipe.marks_per_realization = 200;
  const auto n = clt_normalize(cfg, DirectionalModel::uniform(), recipe, RandomStream(11));
  EXPECT_EQ(n.replications, 30u);
  EXPECT_EQ(n.covariance_nodes, 27u);
  EXPECT_GT(n.variance, 0.0);
  EXPECT_GT(n.log_density_variance, 0.0);
  // -log f_hat is centred near log 4 pi, biased up by the estimation noise
  EXPECT_GT(n.mean_neg_log_density, std::log(kFourPi) - 0.05);
  EXPECT_LT(n.mean_neg_log_density, std::log(kFourPi) + 0.3);
  recipe.covariance_nodes = 20;
  EXPECT_THROW((void)clt_normalize(cfg, DirectionalModel::uniform(), recipe, RandomStream(11)),
               ConfigError);
  cfg.sub_window.reset();
  EXPECT_THROW((void)clt_normalize(cfg, DirectionalModel::uniform(), CltRecipe{}, RandomStream(11)),
               ConfigError);
}

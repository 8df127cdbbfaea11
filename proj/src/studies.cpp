#include "fibrescan/studies.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "fibrescan/error.hpp"
#include "fibrescan/parallel.hpp"

namespace fibrescan {

namespace {

std::string shortest(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

SimulationSpec with_model(SimulationSpec spec, const DirectionalModel& model) {
  spec.model = model;
  return spec;
}

}  // namespace

DensityReport run_density(const DensityCommand& cmd, const RandomStream& rng,
                          std::size_t threads) {
  const Cube window = cmd.data.data_window();
  const SphereGrid grid = SphereGrid::equal_area(cmd.grid_bands);
  DensityReport report;
  report.bandwidth = cmd.bandwidth.value_or(default_bandwidth(window.volume()));
  report.grid_nodes = grid.size();
  for (const auto kernel : cmd.kernels) {
    for (const auto& model : cmd.models) {
      report.cells.push_back({kernel, model, {}, 0.0});
    }
  }
  const RandomStream sim = rng.split("simulate");
  for (std::size_t m = 0; m < cmd.models.size(); ++m) {
    for (std::size_t r = 0; r < cmd.replications; ++r) {
      const FibreSystem system =
          cmd.data.simulated()
              ? with_model(*cmd.data.simulation, cmd.models[m])
                    .simulate(sim.split(cmd.models[m].name()).split(r), threads)
              : cmd.data.load(sim, threads);
      for (std::size_t k = 0; k < cmd.kernels.size(); ++k) {
        EstimatorConfig cfg;
        cfg.kernel = Kernel(cmd.kernels[k], cmd.normalization);
        cfg.bandwidth = report.bandwidth;
        cfg.intensity = cmd.data.data_intensity();
        cfg.window = window;
        cfg.threads = threads;
        report.cells[k * cmd.models.size() + m].errors.push_back(
            density_sup_error(system, cfg, cmd.models[m], grid));
      }
    }
  }
  for (auto& cell : report.cells) cell.median = median_of(cell.errors);
  return report;
}

EntropyReport run_entropy(const EntropyCommand& cmd, const RandomStream& rng,
                          std::size_t threads) {
  const Cube window = cmd.data.data_window();
  EntropyReport report;
  report.bandwidth = cmd.bandwidth.value_or(default_bandwidth(window.volume()));
  EstimatorConfig cfg;
  cfg.kernel = cmd.kernel;
  cfg.bandwidth = report.bandwidth;
  cfg.intensity = cmd.data.data_intensity();
  cfg.window = window;
  cfg.sub_window = cmd.sub_window;
  cfg.evaluation = cmd.evaluation;
  cfg.threads = threads;
  cfg.validate();
  const SphereGrid truth_grid = SphereGrid::equal_area(cmd.truth_grid_bands);

  // The modified estimator's original covers B ⊕ B', so no window is clipped.
  const Cube original_window =
      cmd.modified && cmd.sub_window
          ? Cube(window.origin() + cmd.sub_window->origin(), window.side() + cmd.sub_window->side())
          : window;
  if (cmd.modified) cfg.support = original_window;

  std::vector<std::optional<DirectionalModel>> models;
  for (const auto& m : cmd.models) models.emplace_back(m);
  if (models.empty()) models.emplace_back(std::nullopt);

  const RandomStream sim = rng.split("simulate");
  const RandomStream copies = rng.split("copy");
  for (const auto& model : models) {
    EntropyRow row;
    if (model) {
      row.model = *model;
      row.true_entropy = true_entropy(*model, truth_grid);
    }
    for (std::size_t r = 0; r < cmd.replications; ++r) {
      if (!cmd.data.simulated()) {
        row.estimates.push_back(entropy_plain(cmd.data.load(sim, threads), cfg));
        continue;
      }
      SimulationSpec spec = with_model(*cmd.data.simulation, *model);
      const RandomStream stream = sim.split(model->name()).split(r);
      if (!cmd.modified) {
        row.estimates.push_back(entropy_plain(spec.simulate(stream, threads), cfg));
        continue;
      }
      const FibreSystem copy = spec.simulate(copies.split(model->name()).split(r), threads);
      spec.window = original_window;
      row.estimates.push_back(entropy_modified(spec.simulate(stream, threads), copy, cfg));
    }
    std::vector<double> values;
    for (const auto& e : row.estimates) values.push_back(e.value);
    double sum = 0.0;
    for (const double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) row.variance = summarize(values).variance;
    if (row.true_entropy) {
      row.absolute_error = std::abs(row.mean - *row.true_entropy);
      double se = 0.0;
      for (const double v : values) se += (v - *row.true_entropy) * (v - *row.true_entropy);
      row.mean_square_error = se / static_cast<double>(values.size());
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

CltReport run_clt(const CltCommand& cmd, const RandomStream& rng, std::size_t threads) {
  CltReport report;
  report.bandwidth = cmd.bandwidth.value_or(default_bandwidth(cmd.window.volume()));
  const Cube original_window(cmd.window.origin() + cmd.sub_window.origin(),
                             cmd.window.side() + cmd.sub_window.side());
  EstimatorConfig cfg;
  cfg.kernel = cmd.kernel;
  cfg.bandwidth = report.bandwidth;
  cfg.intensity = cmd.intensity;
  cfg.window = cmd.window;
  cfg.sub_window = cmd.sub_window;
  cfg.support = original_window;
  cfg.threads = threads;
  cfg.validate();

  report.normalization = clt_normalize(cfg, cmd.model, cmd.recipe, rng.split("normalization"));
  const double sigma = report.normalization.sigma();
  const double volume = cmd.window.volume();

  report.replicates.resize(cmd.replications);
  const RandomStream reps = rng.split("replications");
  EstimatorConfig serial = cfg;
  serial.threads = 1;
  SimulationOptions options;
  options.threads = 1;
  parallel_for(cmd.replications, threads, [&](std::size_t r) {
    const RandomStream stream = reps.split(r);
    const FibreSystem original = simulate_homogeneous(original_window, cmd.intensity, cmd.model,
                                                      stream.split("original"), options);
    const FibreSystem copy =
        simulate_homogeneous(cmd.window, cmd.intensity, cmd.model, stream.split("copy"), options);
    const EntropyEstimate e = entropy_modified(original, copy, serial);
    CltReplicate& out = report.replicates[r];
    out.estimate = e.value;
    out.copy_count = e.terms;
    out.clamped = e.clamped;
    out.centering = report.normalization.centering(e.terms, cmd.intensity, volume);
    out.statistic = standardized_statistic(e.value, out.centering, sigma, volume);
  });
  std::vector<double> stats;
  for (const auto& r : report.replicates) stats.push_back(r.statistic);
  report.summary = summarize(stats);
  report.ks = ks_test_normal(stats);
  return report;
}

ScanConfig make_scan_config(const ScanCommand& cmd, std::size_t threads) {
  ScanConfig cfg;
  cfg.window = cmd.window.value_or(cmd.data.data_window());
  cfg.scan_side = cmd.scan_side();
  cfg.mesh = cmd.mesh;
  cfg.multiplier = cmd.multiplier;
  cfg.mode = cmd.mode;
  cfg.estimator.kernel = cmd.kernel;
  cfg.estimator.intensity = cmd.data.data_intensity();
  cfg.estimator.bandwidth = cmd.bandwidth.value_or(0.0);
  cfg.min_points = cmd.min_points;
  cfg.threads = threads;
  cfg.validate();
  return cfg;
}

DetectionResult run_detection(const FibreSystem& system, const FibreSystem* copy,
                              const ScanConfig& cfg) {
  if (cfg.mode == ScanMode::Modified && copy == nullptr) {
    throw ConfigError("scan: modified mode needs an independent copy");
  }
  const ScanField field = cfg.mode == ScanMode::Plain ? scan_entropy_field(system, cfg)
                                                      : scan_entropy_field(system, *copy, cfg);
  const ScanStats stats = robust_stats(field);
  return excursion_set(field, stats, cfg.multiplier);
}

ScanReport run_scan(const ScanCommand& cmd, const RandomStream& rng, std::size_t threads) {
  const ScanConfig cfg = make_scan_config(cmd, threads);
  const FibreSystem system = cmd.data.load(rng.split("simulate"), threads);
  std::optional<FibreSystem> copy;
  if (cmd.mode == ScanMode::Modified) copy = cmd.data.load(rng.split("copy"), threads);
  ScanReport report{cfg, system.size(), run_detection(system, copy ? &*copy : nullptr, cfg),
                    {}, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  report.truth = cmd.truth_regions();
  if (!report.truth.empty()) {
    report.quality = detection_quality(report.truth, report.result);
    report.dvol = dvol_estimate(report.truth, report.result);
  }
  if (cmd.companion) {
    const SimulationSpec homogeneous = cmd.data.simulation->homogeneous();
    const FibreSystem companion = homogeneous.simulate(rng.split("companion"), threads);
    std::optional<FibreSystem> companion_copy;
    if (cmd.mode == ScanMode::Modified) {
      companion_copy = homogeneous.simulate(rng.split("companion").split("copy"), threads);
    }
    const DetectionResult baseline =
        run_detection(companion, companion_copy ? &*companion_copy : nullptr, report.config);
    report.false_alarm = static_cast<double>(baseline.flagged.size()) /
                         static_cast<double>(baseline.field.valid_count());
    if (report.truth.size() == 1 && std::holds_alternative<Cube>(report.truth.front())) {
      const double a = std::get<Cube>(report.truth.front()).side();
      report.dvol_bound_value = dvol_bound(a, report.config.scan_side,
                                           report.config.window.side(), *report.false_alarm);
    }
  }
  return report;
}

// --- documents ------------------------------------------------------------------

Json to_json(const DensityReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"kernel", to_string(c.kernel)},
                     {"model", c.model.name()},
                     {"errors", c.errors},
                     {"median_error", c.median}});
  }
  return {{"bandwidth", r.bandwidth}, {"grid_nodes", r.grid_nodes}, {"cells", cells}};
}

Json to_json(const EntropyReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json estimates = Json::array();
    for (const auto& e : row.estimates) {
      estimates.push_back({{"value", e.value},
                           {"terms", e.terms},
                           {"clamped", e.clamped},
                           {"unreliable", e.unreliable},
                           {"degenerate_copy", e.degenerate_copy},
                           {"gridded", e.gridded}});
    }
    Json j = {{"model", row.model.name()},
              {"estimates", estimates},
              {"mean", row.mean},
              {"variance", row.variance},
              {"true_entropy", nullptr},
              {"absolute_error", nullptr},
              {"mean_square_error", nullptr}};
    if (row.true_entropy) j["true_entropy"] = *row.true_entropy;
    if (row.absolute_error) j["absolute_error"] = *row.absolute_error;
    if (row.mean_square_error) j["mean_square_error"] = *row.mean_square_error;
    rows.push_back(j);
  }
  return {{"bandwidth", r.bandwidth}, {"rows", rows}};
}

Json to_json(const CltReport& r) {
  const auto& n = r.normalization;
  std::size_t clamped = 0;
  for (const auto& rep : r.replicates) clamped += rep.clamped;
  return {{"bandwidth", r.bandwidth},
          {"normalization",
           {{"mean_neg_log_density", n.mean_neg_log_density},
            {"log_density_variance", n.log_density_variance},
            {"covariance_integral", n.covariance_integral},
            {"variance", n.variance},
            {"sigma", n.sigma()},
            {"replications", n.replications},
            {"covariance_nodes", n.covariance_nodes}}},
          {"replications", r.replicates.size()},
          {"summary",
           {{"mean", r.summary.mean},
            {"variance", r.summary.variance},
            {"skewness", r.summary.skewness},
            {"excess_kurtosis", r.summary.excess_kurtosis},
            {"ks_distance", r.ks.distance},
            {"ks_p_value", r.ks.p_value}}},
          {"clamped_terms", clamped}};
}

Json to_json(const ScanReport& r) {
  const auto& cfg = r.config;
  const auto& res = r.result;
  Json flagged = Json::array();
  for (const std::size_t i : res.flagged) flagged.push_back(to_json(res.field.lattice.point(i)));
  Json points = Json::array();
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < res.field.size(); ++i) {
    clamped += res.field.clamped[i];
    const bool valid = res.field.valid[i] != 0;
    points.push_back({{"x", to_json(res.field.lattice.point(i))},
                      {"entropy", valid ? Json(res.field.values[i]) : Json(nullptr)},
                      {"deviation", valid ? Json(res.deviations[i]) : Json(nullptr)},
                      {"count", res.field.counts[i]},
                      {"valid", valid}});
  }
  Json truth = Json::array();
  for (const auto& t : r.truth) truth.push_back(to_json(t));
  Json j = {
      {"config",
       {{"window", to_json(cfg.window)},
        {"scan_side", cfg.scan_side},
        {"mesh", cfg.effective_mesh()},
        {"multiplier", cfg.multiplier},
        {"mode", cfg.mode == ScanMode::Plain ? "plain" : "modified"},
        {"kernel", to_json(cfg.estimator.kernel)},
        {"bandwidth", cfg.effective_bandwidth()},
        {"intensity", cfg.estimator.intensity},
        {"min_points", cfg.min_points}}},
      {"stats",
       {{"median", res.stats.median},
        {"mean", res.stats.mean},
        {"variance", res.stats.variance},
        {"sigma", res.stats.sigma()},
        {"n", res.stats.n}}},
      {"diagnostics",
       {{"point_count", r.point_count},
        {"lattice_points", res.field.size()},
        {"lattice_per_axis", res.field.lattice.per_axis()},
        {"valid_points", res.field.valid_count()},
        {"invalid_points", res.field.size() - res.field.valid_count()},
        {"clamped_terms", clamped},
        {"flagged_points", res.flagged.size()}}},
      {"flagged", flagged},
      {"points", points},
      {"truth", truth},
  };
  if (r.quality) {
    Json region = Json::array();
    for (const double c : r.quality->region_coverage) region.push_back(c);
    j["quality"] = {{"coverage", r.quality->coverage},
                    {"false_positive_rate", r.quality->false_positive_rate},
                    {"boundary_flag_rate", r.quality->boundary_flag_rate},
                    {"core_points", r.quality->core_points},
                    {"exterior_points", r.quality->exterior_points},
                    {"boundary_points", r.quality->boundary_points},
                    {"region_coverage", region}};
  }
  if (r.dvol) j["dvol"] = *r.dvol;
  if (r.false_alarm) j["false_alarm"] = *r.false_alarm;
  if (r.dvol_bound_value) j["dvol_bound"] = *r.dvol_bound_value;
  return j;
}

void write_clt_csv(const CltReport& r, std::ostream& out) {
  out << "replication,estimate,copy_count,centering,statistic\n";
  for (std::size_t i = 0; i < r.replicates.size(); ++i) {
    const auto& rep = r.replicates[i];
    out << i << ',' << shortest(rep.estimate) << ',' << rep.copy_count << ','
        << shortest(rep.centering) << ',' << shortest(rep.statistic) << '\n';
  }
}

void write_field_csv(const ScanField& field, std::ostream& out) {
  out << "x,y,z,entropy,valid\n";
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Vec3 p = field.lattice.point(i);
    out << shortest(p.x) << ',' << shortest(p.y) << ',' << shortest(p.z) << ','
        << shortest(field.values[i]) << ',' << (field.valid[i] ? 1 : 0) << '\n';
  }
}

}  // namespace fibrescan

// config.hpp -- run configurations and their JSON form.
//
// Every command reads one JSON document. Parsing is strict: unknown keys and
// out-of-range values raise ConfigError. to_json writes the fully resolved
// form, which parses back to the same configuration.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fibrescan/detection.hpp"
#include "fibrescan/directional.hpp"
#include "fibrescan/estimation.hpp"
#include "fibrescan/geometry.hpp"
#include "fibrescan/kernel.hpp"
#include "fibrescan/process.hpp"

namespace fibrescan {

using Json = nlohmann::json;

/// A homogeneous or region-inhomogeneous marked Poisson process.
struct SimulationSpec {
  double intensity{0.0};
  Cube window;
  /// Mark law everywhere, or outside the regions.
  DirectionalModel model;
  std::vector<Region> regions;
  /// Mark law inside the regions; required when regions are present.
  std::optional<DirectionalModel> inside;
  std::optional<double> fibre_length;

  void validate() const;
  [[nodiscard]] FibreSystem simulate(const RandomStream& rng, std::size_t threads) const;
  /// Same process with the regions removed.
  [[nodiscard]] SimulationSpec homogeneous() const;
};

/// Where the fibre system comes from: a simulation or a point-cloud file.
struct DataSource {
  std::optional<SimulationSpec> simulation;
  std::string points_path;
  /// Window and intensity of the point-cloud file.
  Cube window;
  double intensity{0.0};

  [[nodiscard]] bool simulated() const noexcept { return simulation.has_value(); }
  [[nodiscard]] const Cube& data_window() const noexcept {
    return simulation ? simulation->window : window;
  }
  [[nodiscard]] double data_intensity() const noexcept {
    return simulation ? simulation->intensity : intensity;
  }
  /// Simulates from `rng` or reads the file (IoError on failure).
  [[nodiscard]] FibreSystem load(const RandomStream& rng, std::size_t threads) const;
};

struct SimulateCommand {
  SimulationSpec simulation;
};

/// Sup-norm density error for each kernel and true model.
struct DensityCommand {
  DataSource data;
  std::vector<KernelType> kernels;
  KernelNormalization normalization{KernelNormalization::Spherical};
  /// True mark laws. With a simulated source each is simulated in turn;
  /// with a file source exactly one is allowed.
  std::vector<DirectionalModel> models;
  std::optional<double> bandwidth;
  std::size_t grid_bands{40};
  std::size_t replications{1};
};

struct EntropyCommand {
  DataSource data;
  std::vector<DirectionalModel> models;
  Kernel kernel;
  std::optional<double> bandwidth;
  std::optional<Cube> sub_window;
  bool modified{false};
  std::size_t replications{1};
  DensityEvaluation evaluation{DensityEvaluation::Automatic};
  std::size_t truth_grid_bands{400};
};

struct CltCommand {
  double intensity{0.0};
  Cube window;
  Cube sub_window;
  DirectionalModel model;
  Kernel kernel;
  std::optional<double> bandwidth;
  std::size_t replications{200};
  CltRecipe recipe;
};

struct OptimalWidthInput {
  double a{0.0};
  double w{0.0};
  double false_alarm{0.05};
};

struct ScanCommand {
  DataSource data;
  /// Observation window W; defaults to the data window.
  std::optional<Cube> window;
  /// Scanning window side; exactly one of side and optimal is given.
  std::optional<double> side;
  std::optional<OptimalWidthInput> optimal;
  double mesh{0.0};
  double multiplier{3.0};
  ScanMode mode{ScanMode::Plain};
  Kernel kernel;
  std::optional<double> bandwidth;
  std::size_t min_points{30};
  /// Regions used for quality metrics; defaults to the simulated regions.
  std::optional<std::vector<Region>> truth;
  /// Also scan a homogeneous companion realization to measure alpha_f.
  bool companion{false};

  /// Resolves b from `side` or the optimal-width input. Throws ConfigError
  /// if the derived width is not valid.
  [[nodiscard]] double scan_side() const;
  [[nodiscard]] std::vector<Region> truth_regions() const;
};

// --- JSON primitives -------------------------------------------------------

[[nodiscard]] Vec3 vec3_from_json(const Json& j);
[[nodiscard]] Json to_json(const Vec3& v);
/// A number (side of [0, s]^3) or {"origin": [x, y, z], "side": s}.
[[nodiscard]] Cube cube_from_json(const Json& j);
[[nodiscard]] Json to_json(const Cube& c);
/// "uniform" or {"family": ..., "kappa" | "beta": ..., "axis": [x, y, z]}.
[[nodiscard]] DirectionalModel model_from_json(const Json& j);
[[nodiscard]] Json to_json(const DirectionalModel& m);
/// "Tricube" or {"type": "Tricube", "normalization": "spherical" | "linear"}.
[[nodiscard]] Kernel kernel_from_json(const Json& j);
[[nodiscard]] Json to_json(const Kernel& k);
/// {"cube": {...}} or {"ball": {"center": [...], "radius": r}}.
[[nodiscard]] Region region_from_json(const Json& j);
[[nodiscard]] Json to_json(const Region& r);
[[nodiscard]] Json to_json(const CltRecipe& r);

// --- commands ---------------------------------------------------------------

[[nodiscard]] SimulationSpec simulation_from_json(const Json& j);
[[nodiscard]] Json to_json(const SimulationSpec& s);
[[nodiscard]] DataSource data_source_from_json(const Json& j);
[[nodiscard]] Json to_json(const DataSource& d);

[[nodiscard]] SimulateCommand simulate_command_from_json(const Json& j);
[[nodiscard]] DensityCommand density_command_from_json(const Json& j);
[[nodiscard]] EntropyCommand entropy_command_from_json(const Json& j);
[[nodiscard]] CltCommand clt_command_from_json(const Json& j);
[[nodiscard]] ScanCommand scan_command_from_json(const Json& j);

[[nodiscard]] Json to_json(const SimulateCommand& c);
[[nodiscard]] Json to_json(const DensityCommand& c);
[[nodiscard]] Json to_json(const EntropyCommand& c);
[[nodiscard]] Json to_json(const CltCommand& c);
[[nodiscard]] Json to_json(const ScanCommand& c);

/// Parses a JSON file; IoError if unreadable, ConfigError if malformed.
[[nodiscard]] Json read_json_file(const std::string& path);

}  // namespace fibrescan

#include "fibrescan/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "fibrescan/error.hpp"

namespace fibrescan {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void require_object(const Json& j, std::string_view what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
}

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                std::string_view what) {
  require_object(j, what);
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError(std::string(what) + ": unknown key '" + item.key() + "'");
    }
  }
}

const Json& member(const Json& j, const char* key, std::string_view what) {
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string(what) + ": missing '" + key + "'");
  return *it;
}

double number(const Json& j, const char* key, std::string_view what) {
  const Json& v = member(j, key, what);
  if (!v.is_number()) throw ConfigError(std::string(what) + ": '" + key + "' must be a number");
  return v.get<double>();
}

double positive(const Json& j, const char* key, std::string_view what) {
  const double v = number(j, key, what);
  if (!(v > 0.0)) throw ConfigError(std::string(what) + ": '" + key + "' must be positive");
  return v;
}

std::optional<double> optional_positive(const Json& j, const char* key, std::string_view what) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return positive(j, key, what);
}

std::size_t count(const Json& j, const char* key, std::string_view what, std::size_t fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string(what) + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

bool flag(const Json& j, const char* key, std::string_view what, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) {
    throw ConfigError(std::string(what) + ": '" + key + "' must be true or false");
  }
  return j.at(key).get<bool>();
}

std::string text(const Json& j, const char* key, std::string_view what) {
  const Json& v = member(j, key, what);
  if (!v.is_string()) throw ConfigError(std::string(what) + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<DirectionalModel> models_from(const Json& j, std::string_view what) {
  if (!j.is_array() || j.empty()) {
    throw ConfigError(std::string(what) + ": 'models' must be a non-empty array");
  }
  std::vector<DirectionalModel> out;
  for (const auto& m : j) out.push_back(model_from_json(m));
  return out;
}

Json models_to_json(const std::vector<DirectionalModel>& models) {
  Json out = Json::array();
  for (const auto& m : models) out.push_back(to_json(m));
  return out;
}

DensityEvaluation evaluation_from(const std::string& s) {
  const auto l = lower(s);
  if (l == "automatic") return DensityEvaluation::Automatic;
  if (l == "exact") return DensityEvaluation::Exact;
  if (l == "gridded") return DensityEvaluation::Gridded;
  throw ConfigError("unknown density evaluation '" + s + "'");
}

std::string to_string(DensityEvaluation e) {
  switch (e) {
    case DensityEvaluation::Automatic:
      return "automatic";
    case DensityEvaluation::Exact:
      return "exact";
    case DensityEvaluation::Gridded:
      return "gridded";
  }
  return "automatic";
}

CltRecipe recipe_from(const Json& j) {
  constexpr std::string_view what = "clt recipe";
  check_keys(j,
             {"replications", "covariance_nodes", "marks_per_realization", "marks_per_node",
              "count_decomposition"},
             what);
  CltRecipe r;
  r.replications = count(j, "replications", what, r.replications);
  r.covariance_nodes = count(j, "covariance_nodes", what, r.covariance_nodes);
  r.marks_per_realization = count(j, "marks_per_realization", what, r.marks_per_realization);
  r.marks_per_node = count(j, "marks_per_node", what, r.marks_per_node);
  r.count_decomposition = flag(j, "count_decomposition", what, r.count_decomposition);
  return r;
}

}  // namespace

// --- primitives --------------------------------------------------------------

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw ConfigError("expected a coordinate triple [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Cube cube_from_json(const Json& j) {
  if (j.is_number()) {
    const double side = j.get<double>();
    if (!(side > 0.0)) throw ConfigError("cube side must be positive");
    return Cube(side);
  }
  check_keys(j, {"origin", "side"}, "cube");
  const Vec3 origin = j.contains("origin") ? vec3_from_json(j.at("origin")) : Vec3{};
  return Cube(origin, positive(j, "side", "cube"));
}

Json to_json(const Cube& c) { return {{"origin", to_json(c.origin())}, {"side", c.side()}}; }

DirectionalModel model_from_json(const Json& j) {
  if (j.is_string()) {
    if (lower(j.get<std::string>()) == "uniform") return DirectionalModel::uniform();
    throw ConfigError("model '" + j.get<std::string>() + "' needs parameters");
  }
  check_keys(j, {"family", "kappa", "beta", "axis"}, "model");
  const std::string family = lower(text(j, "family", "model"));
  const UnitVector3 axis = j.contains("axis") ? UnitVector3::normalized(vec3_from_json(j.at("axis")))
                                              : UnitVector3::e3();
  if (family == "uniform") return DirectionalModel::uniform();
  if (family == "fisher") return DirectionalModel::fisher(axis, positive(j, "kappa", "model"));
  if (family == "watson") return DirectionalModel::watson(axis, positive(j, "kappa", "model"));
  if (family == "schladitz") return DirectionalModel::schladitz(positive(j, "beta", "model"), axis);
  throw ConfigError("unknown model family '" + family + "'");
}

Json to_json(const DirectionalModel& m) {
  switch (m.family()) {
    case DirectionalFamily::Uniform:
      return {{"family", "uniform"}};
    case DirectionalFamily::Fisher:
      return {{"family", "fisher"}, {"kappa", m.parameter()}, {"axis", to_json(m.axis().vec())}};
    case DirectionalFamily::Watson:
      return {{"family", "watson"}, {"kappa", m.parameter()}, {"axis", to_json(m.axis().vec())}};
    case DirectionalFamily::Schladitz:
      return {{"family", "schladitz"}, {"beta", m.parameter()}, {"axis", to_json(m.axis().vec())}};
  }
  return {{"family", "uniform"}};
}

Kernel kernel_from_json(const Json& j) {
  if (j.is_string()) return Kernel(parse_kernel(j.get<std::string>()));
  check_keys(j, {"type", "normalization"}, "kernel");
  const KernelType type = parse_kernel(text(j, "type", "kernel"));
  KernelNormalization normalization = KernelNormalization::Spherical;
  if (j.contains("normalization")) {
    const auto n = lower(text(j, "normalization", "kernel"));
    if (n == "linear") {
      normalization = KernelNormalization::Linear;
    } else if (n != "spherical") {
      throw ConfigError("kernel normalization must be 'spherical' or 'linear'");
    }
  }
  return Kernel(type, normalization);
}

Json to_json(const Kernel& k) {
  return {{"type", to_string(k.type())},
          {"normalization",
           k.normalization() == KernelNormalization::Spherical ? "spherical" : "linear"}};
}

Region region_from_json(const Json& j) {
  check_keys(j, {"cube", "ball"}, "region");
  if (j.contains("cube") == j.contains("ball")) {
    throw ConfigError("region: give exactly one of 'cube' and 'ball'");
  }
  if (j.contains("cube")) return cube_from_json(j.at("cube"));
  const Json& b = j.at("ball");
  check_keys(b, {"center", "radius"}, "ball");
  return Ball{vec3_from_json(member(b, "center", "ball")), positive(b, "radius", "ball")};
}

Json to_json(const Region& r) {
  if (const auto* c = std::get_if<Cube>(&r)) return {{"cube", to_json(*c)}};
  const auto& b = std::get<Ball>(r);
  return {{"ball", {{"center", to_json(b.center)}, {"radius", b.radius}}}};
}

Json to_json(const CltRecipe& r) {
  return {{"replications", r.replications},
          {"covariance_nodes", r.covariance_nodes},
          {"marks_per_realization", r.marks_per_realization},
          {"marks_per_node", r.marks_per_node},
          {"count_decomposition", r.count_decomposition}};
}

// --- simulation and data -------------------------------------------------------

void SimulationSpec::validate() const {
  if (!(intensity > 0.0)) throw ConfigError("simulation: intensity must be positive");
  if (!(window.side() > 0.0)) throw ConfigError("simulation: window is empty");
  if (!regions.empty() && !inside) {
    throw ConfigError("simulation: regions need an 'inside' model");
  }
  if (fibre_length && !(*fibre_length > 0.0)) {
    throw ConfigError("simulation: fibre length must be positive");
  }
}

FibreSystem SimulationSpec::simulate(const RandomStream& rng, std::size_t threads) const {
  validate();
  SimulationOptions options;
  options.threads = threads;
  FibreSystem system =
      regions.empty()
          ? simulate_homogeneous(window, intensity, model, rng, options)
          : simulate_with_inhomogeneity(window, intensity, {regions, *inside, model}, rng, options);
  if (fibre_length) return system.with_fibre_length(*fibre_length);
  return system;
}

SimulationSpec SimulationSpec::homogeneous() const {
  SimulationSpec out = *this;
  out.regions.clear();
  out.inside.reset();
  return out;
}

SimulationSpec simulation_from_json(const Json& j) {
  constexpr std::string_view what = "simulation";
  check_keys(j, {"intensity", "window", "model", "regions", "inside", "fibre_length"}, what);
  SimulationSpec s;
  s.intensity = positive(j, "intensity", what);
  s.window = cube_from_json(member(j, "window", what));
  s.model = j.contains("model") ? model_from_json(j.at("model")) : DirectionalModel::uniform();
  if (j.contains("regions")) {
    if (!j.at("regions").is_array()) throw ConfigError("simulation: 'regions' must be an array");
    for (const auto& r : j.at("regions")) s.regions.push_back(region_from_json(r));
  }
  if (j.contains("inside")) s.inside = model_from_json(j.at("inside"));
  s.fibre_length = optional_positive(j, "fibre_length", what);
  s.validate();
  return s;
}

Json to_json(const SimulationSpec& s) {
  Json j = {{"intensity", s.intensity}, {"window", to_json(s.window)}, {"model", to_json(s.model)}};
  if (!s.regions.empty()) {
    Json regions = Json::array();
    for (const auto& r : s.regions) regions.push_back(to_json(r));
    j["regions"] = regions;
  }
  if (s.inside) j["inside"] = to_json(*s.inside);
  if (s.fibre_length) j["fibre_length"] = *s.fibre_length;
  return j;
}

FibreSystem DataSource::load(const RandomStream& rng, std::size_t threads) const {
  if (simulation) return simulation->simulate(rng, threads);
  std::ifstream in(points_path);
  if (!in) throw IoError("cannot open point cloud '" + points_path + "'");
  return read_point_cloud(in, window, intensity);
}

DataSource data_source_from_json(const Json& j) {
  constexpr std::string_view what = "data";
  check_keys(j, {"simulation", "points", "window", "intensity"}, what);
  DataSource d;
  if (j.contains("simulation") == j.contains("points")) {
    throw ConfigError("data: give exactly one of 'simulation' and 'points'");
  }
  if (j.contains("simulation")) {
    d.simulation = simulation_from_json(j.at("simulation"));
    return d;
  }
  d.points_path = text(j, "points", what);
  d.window = cube_from_json(member(j, "window", what));
  d.intensity = positive(j, "intensity", what);
  return d;
}

Json to_json(const DataSource& d) {
  if (d.simulation) return {{"simulation", to_json(*d.simulation)}};
  return {{"points", d.points_path}, {"window", to_json(d.window)}, {"intensity", d.intensity}};
}

// --- commands ----------------------------------------------------------------

SimulateCommand simulate_command_from_json(const Json& j) {
  check_keys(j, {"command", "simulation"}, "simulate config");
  return {simulation_from_json(member(j, "simulation", "simulate config"))};
}

Json to_json(const SimulateCommand& c) {
  return {{"command", "simulate"}, {"simulation", to_json(c.simulation)}};
}

DensityCommand density_command_from_json(const Json& j) {
  constexpr std::string_view what = "density config";
  check_keys(j,
             {"command", "data", "kernels", "normalization", "models", "bandwidth", "grid_bands",
              "replications"},
             what);
  DensityCommand c;
  c.data = data_source_from_json(member(j, "data", what));
  if (!j.contains("kernels") || (j.at("kernels").is_string() && lower(j.at("kernels").get<std::string>()) == "all")) {
    c.kernels.assign(kAllKernels.begin(), kAllKernels.end());
  } else {
    if (!j.at("kernels").is_array() || j.at("kernels").empty()) {
      throw ConfigError("density config: 'kernels' must be \"all\" or a non-empty array");
    }
    for (const auto& k : j.at("kernels")) {
      if (!k.is_string()) throw ConfigError("density config: kernel names must be strings");
      c.kernels.push_back(parse_kernel(k.get<std::string>()));
    }
  }
  if (j.contains("normalization")) {
    const auto n = lower(text(j, "normalization", what));
    if (n == "linear") {
      c.normalization = KernelNormalization::Linear;
    } else if (n != "spherical") {
      throw ConfigError("density config: normalization must be 'spherical' or 'linear'");
    }
  }
  if (j.contains("models")) {
    c.models = models_from(j.at("models"), what);
  } else if (c.data.simulation) {
    c.models = {c.data.simulation->model};
  } else {
    throw ConfigError("density config: a point-cloud source needs 'models' (the true law)");
  }
  if (!c.data.simulated() && c.models.size() != 1) {
    throw ConfigError("density config: a point-cloud source takes exactly one model");
  }
  if (c.data.simulation && !c.data.simulation->regions.empty()) {
    throw ConfigError("density config: the simulation must be homogeneous");
  }
  c.bandwidth = optional_positive(j, "bandwidth", what);
  c.grid_bands = count(j, "grid_bands", what, c.grid_bands);
  c.replications = count(j, "replications", what, c.replications);
  if (c.grid_bands < 2) throw ConfigError("density config: grid_bands must be at least 2");
  if (c.replications < 1) throw ConfigError("density config: replications must be at least 1");
  if (!c.data.simulated() && c.replications != 1) {
    throw ConfigError("density config: a point-cloud source allows a single replication");
  }
  return c;
}

Json to_json(const DensityCommand& c) {
  Json kernels = Json::array();
  for (const auto k : c.kernels) kernels.push_back(to_string(k));
  Json j = {{"command", "density"},
            {"data", to_json(c.data)},
            {"kernels", kernels},
            {"normalization",
             c.normalization == KernelNormalization::Spherical ? "spherical" : "linear"},
            {"models", models_to_json(c.models)},
            {"grid_bands", c.grid_bands},
            {"replications", c.replications}};
  if (c.bandwidth) j["bandwidth"] = *c.bandwidth;
  return j;
}

EntropyCommand entropy_command_from_json(const Json& j) {
  constexpr std::string_view what = "entropy config";
  check_keys(j,
             {"command", "data", "models", "kernel", "bandwidth", "sub_window", "estimator",
              "replications", "evaluation", "truth_grid_bands"},
             what);
  EntropyCommand c;
  c.data = data_source_from_json(member(j, "data", what));
  if (j.contains("models")) {
    c.models = models_from(j.at("models"), what);
  } else if (c.data.simulation) {
    c.models = {c.data.simulation->model};
  }
  if (!c.data.simulated() && c.models.size() > 1) {
    throw ConfigError("entropy config: a point-cloud source takes at most one model");
  }
  if (c.data.simulation && !c.data.simulation->regions.empty()) {
    throw ConfigError("entropy config: the simulation must be homogeneous");
  }
  if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
  c.bandwidth = optional_positive(j, "bandwidth", what);
  if (j.contains("sub_window") && !j.at("sub_window").is_null()) {
    c.sub_window = cube_from_json(j.at("sub_window"));
  }
  if (j.contains("estimator")) {
    const auto e = lower(text(j, "estimator", what));
    if (e == "modified") {
      c.modified = true;
    } else if (e != "plain") {
      throw ConfigError("entropy config: estimator must be 'plain' or 'modified'");
    }
  }
  if (c.modified && !c.data.simulated()) {
    throw ConfigError("entropy config: the modified estimator needs a simulated source");
  }
  c.replications = count(j, "replications", what, c.replications);
  if (c.replications < 1) throw ConfigError("entropy config: replications must be at least 1");
  if (!c.data.simulated() && c.replications != 1) {
    throw ConfigError("entropy config: a point-cloud source allows a single replication");
  }
  if (j.contains("evaluation")) c.evaluation = evaluation_from(text(j, "evaluation", what));
  c.truth_grid_bands = count(j, "truth_grid_bands", what, c.truth_grid_bands);
  if (c.truth_grid_bands < 2) throw ConfigError("entropy config: truth_grid_bands must be at least 2");
  return c;
}

Json to_json(const EntropyCommand& c) {
  Json j = {{"command", "entropy"},
            {"data", to_json(c.data)},
            {"models", models_to_json(c.models)},
            {"kernel", to_json(c.kernel)},
            {"estimator", c.modified ? "modified" : "plain"},
            {"replications", c.replications},
            {"evaluation", to_string(c.evaluation)},
            {"truth_grid_bands", c.truth_grid_bands}};
  if (c.bandwidth) j["bandwidth"] = *c.bandwidth;
  if (c.sub_window) j["sub_window"] = to_json(*c.sub_window);
  return j;
}

CltCommand clt_command_from_json(const Json& j) {
  constexpr std::string_view what = "clt config";
  check_keys(j,
             {"command", "intensity", "window", "sub_window", "model", "kernel", "bandwidth",
              "replications", "recipe"},
             what);
  CltCommand c;
  c.intensity = positive(j, "intensity", what);
  c.window = cube_from_json(member(j, "window", what));
  c.sub_window = cube_from_json(member(j, "sub_window", what));
  c.model = j.contains("model") ? model_from_json(j.at("model")) : DirectionalModel::uniform();
  if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
  c.bandwidth = optional_positive(j, "bandwidth", what);
  c.replications = count(j, "replications", what, c.replications);
  if (c.replications < 10) throw ConfigError("clt config: at least 10 replications are required");
  if (j.contains("recipe")) c.recipe = recipe_from(j.at("recipe"));
  if (c.sub_window.side() > c.window.side()) {
    throw ConfigError("clt config: sub-window larger than the window");
  }
  return c;
}

Json to_json(const CltCommand& c) {
  Json j = {{"command", "clt"},
            {"intensity", c.intensity},
            {"window", to_json(c.window)},
            {"sub_window", to_json(c.sub_window)},
            {"model", to_json(c.model)},
            {"kernel", to_json(c.kernel)},
            {"replications", c.replications},
            {"recipe", to_json(c.recipe)}};
  if (c.bandwidth) j["bandwidth"] = *c.bandwidth;
  return j;
}

double ScanCommand::scan_side() const {
  if (side) return *side;
  const auto width = optimal_scan_width(optimal->a, optimal->w, optimal->false_alarm);
  if (!width.valid) {
    throw ConfigError("scan config: the optimal width " + std::to_string(width.value) +
                      " is not in (0, a)");
  }
  return width.value;
}

std::vector<Region> ScanCommand::truth_regions() const {
  if (truth) return *truth;
  if (data.simulation) return data.simulation->regions;
  return {};
}

ScanCommand scan_command_from_json(const Json& j) {
  constexpr std::string_view what = "scan config";
  check_keys(j,
             {"command", "data", "window", "side", "optimal", "mesh", "multiplier", "mode",
              "kernel", "bandwidth", "min_points", "truth", "companion"},
             what);
  ScanCommand c;
  c.data = data_source_from_json(member(j, "data", what));
  if (j.contains("window")) c.window = cube_from_json(j.at("window"));
  if (j.contains("side") == j.contains("optimal")) {
    throw ConfigError("scan config: give exactly one of 'side' and 'optimal'");
  }
  if (j.contains("side")) c.side = positive(j, "side", what);
  if (j.contains("optimal")) {
    const Json& o = j.at("optimal");
    check_keys(o, {"a", "w", "false_alarm"}, "optimal");
    OptimalWidthInput in;
    in.a = positive(o, "a", "optimal");
    in.w = positive(o, "w", "optimal");
    if (o.contains("false_alarm")) in.false_alarm = number(o, "false_alarm", "optimal");
    c.optimal = in;
  }
  if (j.contains("mesh")) c.mesh = positive(j, "mesh", what);
  if (j.contains("multiplier")) c.multiplier = positive(j, "multiplier", what);
  if (j.contains("mode")) {
    const auto m = lower(text(j, "mode", what));
    if (m == "modified") {
      c.mode = ScanMode::Modified;
    } else if (m != "plain") {
      throw ConfigError("scan config: mode must be 'plain' or 'modified'");
    }
  }
  if (c.mode == ScanMode::Modified && !c.data.simulated()) {
    throw ConfigError("scan config: modified mode needs a simulated source");
  }
  if (j.contains("kernel")) c.kernel = kernel_from_json(j.at("kernel"));
  c.bandwidth = optional_positive(j, "bandwidth", what);
  c.min_points = count(j, "min_points", what, c.min_points);
  if (j.contains("truth")) {
    if (!j.at("truth").is_array()) throw ConfigError("scan config: 'truth' must be an array");
    std::vector<Region> regions;
    for (const auto& r : j.at("truth")) regions.push_back(region_from_json(r));
    c.truth = regions;
  }
  c.companion = flag(j, "companion", what, c.companion);
  if (c.companion && !c.data.simulated()) {
    throw ConfigError("scan config: a companion run needs a simulated source");
  }
  (void)c.scan_side();  // validates the optimal-width input early
  return c;
}

Json to_json(const ScanCommand& c) {
  Json j = {{"command", "scan"},
            {"data", to_json(c.data)},
            {"mesh", c.mesh},
            {"multiplier", c.multiplier},
            {"mode", c.mode == ScanMode::Plain ? "plain" : "modified"},
            {"kernel", to_json(c.kernel)},
            {"min_points", c.min_points},
            {"companion", c.companion}};
  if (c.window) j["window"] = to_json(*c.window);
  if (c.side) j["side"] = *c.side;
  if (c.optimal) {
    j["optimal"] = {{"a", c.optimal->a}, {"w", c.optimal->w}, {"false_alarm", c.optimal->false_alarm}};
  }
  if (c.bandwidth) j["bandwidth"] = *c.bandwidth;
  if (c.truth) {
    Json regions = Json::array();
    for (const auto& r : *c.truth) regions.push_back(to_json(r));
    j["truth"] = regions;
  }
  if (j["mesh"] == 0.0) j.erase("mesh");
  return j;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace fibrescan

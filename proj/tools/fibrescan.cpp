// fibrescan -- command-line front-end.
//
//   fibrescan <simulate|density|entropy|clt|scan> --config run.json
//             [--seed N] [--out DIR] [--threads N]
//
// Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numerical failure.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fibrescan/config.hpp"
#include "fibrescan/error.hpp"
#include "fibrescan/parallel.hpp"
#include "fibrescan/studies.hpp"

namespace fs = std::filesystem;
using namespace fibrescan;

namespace {

struct Options {
  std::string config;
  std::uint64_t seed{1};
  std::string out{"."};
  std::size_t threads{0};
};

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const Json& doc) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

// A config naming a different command is rejected rather than half-parsed.
Json load_config(const Options& opt, const std::string& command) {
  Json j = read_json_file(opt.config);
  if (j.is_object() && j.contains("command") && j.at("command") != command) {
    throw ConfigError("config is for '" + j.at("command").dump() + "', not '" + command + "'");
  }
  return j;
}

Json envelope(const std::string& command, const Options& opt, Json config) {
  return {{"command", command}, {"seed", opt.seed}, {"config", std::move(config)}};
}

void simulate(const Options& opt, const fs::path& dir) {
  const SimulateCommand cmd = simulate_command_from_json(load_config(opt, "simulate"));
  const FibreSystem system =
      cmd.simulation.simulate(RandomStream(opt.seed).split("simulate"), resolve_threads(opt.threads));
  {
    auto out = open_output(dir / "points.csv");
    write_point_cloud(system, out);
    if (!out) throw IoError("write failed: points.csv");
  }
  Json meta = envelope("simulate", opt, to_json(cmd));
  meta["intensity"] = cmd.simulation.intensity;
  meta["window"] = to_json(cmd.simulation.window);
  meta["model"] = to_json(cmd.simulation.model);
  if (cmd.simulation.inside) meta["inside"] = to_json(*cmd.simulation.inside);
  meta["regions"] = Json::array();
  for (const auto& r : cmd.simulation.regions) meta["regions"].push_back(to_json(r));
  meta["point_count"] = system.size();
  meta["expected_points"] = cmd.simulation.intensity * cmd.simulation.window.volume();
  write_json(dir / "points.json", meta);
  std::cout << "simulate: " << system.size() << " points -> " << (dir / "points.csv").string()
            << '\n';
}

void density(const Options& opt, const fs::path& dir) {
  const DensityCommand cmd = density_command_from_json(load_config(opt, "density"));
  const DensityReport report = run_density(cmd, RandomStream(opt.seed), resolve_threads(opt.threads));
  Json doc = envelope("density", opt, to_json(cmd));
  doc["report"] = to_json(report);
  write_json(dir / "density.json", doc);
  for (const auto& c : report.cells) {
    std::cout << to_string(c.kernel) << ' ' << c.model.name() << ": " << c.median << '\n';
  }
}

void entropy(const Options& opt, const fs::path& dir) {
  const EntropyCommand cmd = entropy_command_from_json(load_config(opt, "entropy"));
  const EntropyReport report = run_entropy(cmd, RandomStream(opt.seed), resolve_threads(opt.threads));
  Json doc = envelope("entropy", opt, to_json(cmd));
  doc["report"] = to_json(report);
  write_json(dir / "entropy.json", doc);
  for (const auto& r : report.rows) {
    std::cout << r.model.name() << ": mean " << r.mean << " variance " << r.variance;
    if (r.true_entropy) std::cout << " true " << *r.true_entropy;
    std::cout << '\n';
  }
}

void clt(const Options& opt, const fs::path& dir) {
  const CltCommand cmd = clt_command_from_json(load_config(opt, "clt"));
  const CltReport report = run_clt(cmd, RandomStream(opt.seed), resolve_threads(opt.threads));
  {
    auto out = open_output(dir / "clt.csv");
    write_clt_csv(report, out);
    if (!out) throw IoError("write failed: clt.csv");
  }
  Json doc = envelope("clt", opt, to_json(cmd));
  doc["report"] = to_json(report);
  write_json(dir / "clt.json", doc);
  std::cout << "clt: mean " << report.summary.mean << " variance " << report.summary.variance
            << " skewness " << report.summary.skewness << " KS p " << report.ks.p_value << '\n';
}

void scan(const Options& opt, const fs::path& dir) {
  const ScanCommand cmd = scan_command_from_json(load_config(opt, "scan"));
  const ScanReport report = run_scan(cmd, RandomStream(opt.seed), resolve_threads(opt.threads));
  {
    auto out = open_output(dir / "field.csv");
    write_field_csv(report.result.field, out);
    if (!out) throw IoError("write failed: field.csv");
  }
  Json doc = envelope("scan", opt, to_json(cmd));
  doc["report"] = to_json(report);
  write_json(dir / "scan.json", doc);
  std::cout << "scan: b " << report.config.scan_side << ", " << report.result.field.valid_count()
            << " valid lattice points, " << report.result.flagged.size() << " flagged\n";
  if (report.quality) {
    std::cout << "coverage " << report.quality->coverage << " false-positive rate "
              << report.quality->false_positive_rate << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fibre-direction entropy estimation and inhomogeneity scanning"};
  app.require_subcommand(1);
  Options opt;
  std::function<void(const Options&, const fs::path&)> action;

  const auto add = [&](const char* name, const char* help, auto fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON run configuration")->required();
    sub->add_option("--seed", opt.seed, "root random seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
    sub->callback([&action, fn] { action = fn; });
  };
  add("simulate", "simulate a marked point process and write the point cloud", simulate);
  add("density", "sup-norm error of the direction density estimate", density);
  add("entropy", "entropy estimates against the true value", entropy);
  add("clt", "standardized modified-entropy statistic over replications", clt);
  add("scan", "scan the observation window for entropy inhomogeneities", scan);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const fs::path dir(opt.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    action(opt, dir);
  } catch (const Error& e) {
    std::cerr << "fibrescan: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fibrescan: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

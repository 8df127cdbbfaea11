#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "fibrescan/config.hpp"
#include "fibrescan/error.hpp"

using namespace fibrescan;

namespace {

Json reparse(const Json& j) {
  const std::string cmd = j.at("command");
  if (cmd == "simulate") return to_json(simulate_command_from_json(j));
  if (cmd == "density") return to_json(density_command_from_json(j));
  if (cmd == "entropy") return to_json(entropy_command_from_json(j));
  if (cmd == "clt") return to_json(clt_command_from_json(j));
  if (cmd == "scan") return to_json(scan_command_from_json(j));
  throw ConfigError("unknown command " + cmd);
}

Json small_scan() {
  return Json::parse(R"({
    "command": "scan",
    "data": {"simulation": {"intensity": 5, "window": 20, "model": "uniform"}},
    "side": 4
  })");
}

}  // namespace

TEST(Config, RecipesRoundTrip) {
  const std::filesystem::path dir = std::filesystem::path(FIBRESCAN_SOURCE_DIR) / "docs/recipes";
  std::size_t seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    SCOPED_TRACE(entry.path().filename().string());
    const Json once = reparse(read_json_file(entry.path().string()));
    EXPECT_EQ(reparse(once), once);
    ++seen;
  }
  EXPECT_GE(seen, 10u);
}

TEST(Config, PrimitiveForms) {
  EXPECT_EQ(cube_from_json(Json(5.0)).side(), 5.0);
  const Cube c = cube_from_json(Json::parse(R"({"origin": [1, 2, 3], "side": 4})"));
  EXPECT_EQ(c.origin().y, 2.0);
  EXPECT_EQ(cube_from_json(to_json(c)).side(), 4.0);
  EXPECT_EQ(model_from_json(Json("uniform")).name(), DirectionalModel::uniform().name());
  const auto k = kernel_from_json(Json::parse(R"({"type": "biweight", "normalization": "linear"})"));
  EXPECT_EQ(k.type(), KernelType::Biweight);
  EXPECT_EQ(k.normalization(), KernelNormalization::Linear);
  EXPECT_THROW((void)vec3_from_json(Json::parse("[1, 2]")), ConfigError);
  EXPECT_THROW((void)model_from_json(Json::parse(R"({"family": "fisher"})")), ConfigError);
}

TEST(Config, RejectsUnknownKeys) {
  auto j = small_scan();
  j["sidee"] = 3;
  EXPECT_THROW((void)scan_command_from_json(j), ConfigError);
  auto d = small_scan();
  d["data"]["simulation"]["lambda"] = 2;
  EXPECT_THROW((void)scan_command_from_json(d), ConfigError);
}

TEST(Config, CltNeedsTenReplications) {
  auto j = Json::parse(R"({"command": "clt", "intensity": 5, "window": 10, "sub_window": 2,
                           "replications": 9})");
  EXPECT_THROW((void)clt_command_from_json(j), ConfigError);
  j["replications"] = 10;
  EXPECT_NO_THROW((void)clt_command_from_json(j));
}

TEST(Config, ScanWidthChoices) {
  auto both = small_scan();
  both["optimal"] = {{"a", 5}, {"w", 35}};
  EXPECT_THROW((void)scan_command_from_json(both), ConfigError);

  auto neither = small_scan();
  neither.erase("side");
  EXPECT_THROW((void)scan_command_from_json(neither), ConfigError);

  // a false alarm rate this small pushes b past a
  auto invalid = small_scan();
  invalid.erase("side");
  invalid["optimal"] = {{"a", 1}, {"w", 1000}, {"false_alarm", 1e-12}};
  EXPECT_THROW((void)scan_command_from_json(invalid), ConfigError);

  auto derived = small_scan();
  derived.erase("side");
  derived["optimal"] = {{"a", 5}, {"w", 35}, {"false_alarm", 0.05}};
  const auto c = scan_command_from_json(derived);
  const auto width = optimal_scan_width(5, 35, 0.05);
  EXPECT_EQ(c.scan_side(), width.value);
  EXPECT_NEAR(c.scan_side(), 2.4455, 1e-3);
}

TEST(Config, ModifiedModeNeedsSimulation) {
  auto j = small_scan();
  j["data"] = {{"points", "cloud.csv"}, {"window", 20}, {"intensity", 5}};
  EXPECT_NO_THROW((void)scan_command_from_json(j));
  j["mode"] = "modified";
  EXPECT_THROW((void)scan_command_from_json(j), ConfigError);
  j["mode"] = "plain";
  j["companion"] = true;
  EXPECT_THROW((void)scan_command_from_json(j), ConfigError);
}

TEST(Config, RegionsNeedInsideModel) {
  auto j = Json::parse(R"({"command": "simulate", "simulation": {
    "intensity": 5, "window": 20, "model": "uniform",
    "regions": [{"cube": {"origin": [5, 5, 5], "side": 4}}]}})");
  EXPECT_THROW((void)simulate_command_from_json(j), ConfigError);
  j["simulation"]["inside"] = {{"family", "watson"}, {"kappa", 2}, {"axis", {0, 0, 1}}};
  EXPECT_NO_THROW((void)simulate_command_from_json(j));
}

TEST(Config, FileErrors) {
  EXPECT_THROW((void)read_json_file("/nonexistent/config.json"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "fibrescan_bad_config.json";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    ASSERT_NE(f, nullptr);
    std::fputs("{not json", f);
    std::fclose(f);
  }
  EXPECT_THROW((void)read_json_file(path.string()), ConfigError);
  std::filesystem::remove(path);
}

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "lpvslc/io.h"

namespace lpvslc {
namespace {

namespace fs = std::filesystem;

const fs::path kCli = LPVSLC_CLI_PATH;
const fs::path kConfigs = fs::path(LPVSLC_SOURCE_DIR) / "configs";

int run(const std::string& args) {
  const std::string cmd = kCli.string() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Project directory with the shipped trajectory and sim settings and the given plant/design.
fs::path make_project(const std::string& name, const json& plant, const json& design) {
  const fs::path d = fs::temp_directory_path() / ("lpvslc_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  write_json_file(d / "plant.json", plant);
  write_json_file(d / "design.json", design);
  fs::copy_file(kConfigs / "trajectory.json", d / "trajectory.json");
  fs::copy_file(kConfigs / "sim.json", d / "sim.json");
  write_json_file(d / "project.json", json{{"plant", "plant.json"},
                                           {"design", "design.json"},
                                           {"trajectory", "trajectory.json"},
                                           {"sim", "sim.json"},
                                           {"out", (d / "out").string()}});
  return d;
}

json quick_design(double z_cap, double z_min) {
  json j = read_json_file(kConfigs / "design.json");
  j["loops"][0]["bandwidth_cap_hz"] = z_cap;
  j["loops"][0]["bandwidth_min_hz"] = z_min;
  j["frequency_grid"] = {{"f_min_hz", 1.0}, {"f_max_hz", 5000.0}, {"points", 300}};
  j["verify_grid"] = {3, 3};
  return j;
}

TEST(Cli, UsageAndConfigErrorsExitWithTwo) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("nonsense"), 2);
  const fs::path d = fs::temp_directory_path() / "lpvslc_cli_bad";
  fs::create_directories(d);
  std::ofstream(d / "project.json") << "{ \"plant\": ";
  EXPECT_EQ(run("--config " + (d / "project.json").string() + " trajectory"), 2);
  EXPECT_EQ(run("--config " + (d / "none.json").string() + " trajectory"), 2);
}

TEST(Cli, FrfIsDeterministicAndValidatesPositions) {
  const auto d = make_project("frf", to_json(benchmark_plant()), quick_design(100.0, 10.0));
  const std::string cfg = "--config " + (d / "project.json").string();
  ASSERT_EQ(run(cfg + " --out " + (d / "a").string() + " frf --positions '0.05,0.05;0.15,0.1' --grid 1:2000:80"), 0);
  ASSERT_EQ(run(cfg + " --out " + (d / "b").string() + " --jobs 2 frf --positions '0.05,0.05;0.15,0.1' --grid 1:2000:80"), 0);
  EXPECT_TRUE(fs::exists(d / "a" / "frf_1.csv"));
  EXPECT_EQ(slurp(d / "a" / "frf_all.csv"), slurp(d / "b" / "frf_all.csv"));
  EXPECT_EQ(run(cfg + " frf --positions ';'"), 2);
  EXPECT_EQ(run(cfg + " frf --positions 0.5,0.5"), 2);
  EXPECT_EQ(run(cfg + " frf --grid 10:1"), 2);
}

TEST(Cli, RigidPipelineWritesSummary) {
  const auto d = make_project("pipeline", to_json(rigid_benchmark_plant()), quick_design(100.0, 10.0));
  const std::string cfg = "--config " + (d / "project.json").string();
  ASSERT_EQ(run(cfg + " design --mode lti"), 0);
  ASSERT_EQ(run(cfg + " certify --mode lti"), 0);
  ASSERT_EQ(run(cfg + " trajectory"), 0);
  ASSERT_EQ(run(cfg + " simulate --mode lti"), 0);
  ASSERT_EQ(run(cfg + " metrics --mode lti"), 0);
  const json s = read_json_file(d / "out" / "summary.json");
  for (const char* key : {"axis", "window_s", "interval", "reference", "runs", "config"})
    EXPECT_TRUE(s.contains(key)) << key;
  EXPECT_EQ(s["interval"]["kind"], "constant_velocity");
  EXPECT_EQ(s["runs"][0]["name"], "lti");
  EXPECT_GT(s["runs"][0]["msd_m"].get<double>(), 0.0);
  const json c = read_json_file(d / "out" / "controllers_lti.json");
  EXPECT_EQ(c["kind"], "lti");
  EXPECT_EQ(run(cfg + " simulate --mode lpv"), 2);
}

TEST(Cli, InfeasibleDesignExitsWithOne) {
  const auto d = make_project("infeasible", to_json(benchmark_plant()), quick_design(400.0, 390.0));
  EXPECT_EQ(run("--config " + (d / "project.json").string() + " design --mode lti"), 1);
}

}  // namespace
}  // namespace lpvslc

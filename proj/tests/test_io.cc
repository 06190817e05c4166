#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "lpvslc/errors.h"
#include "lpvslc/io.h"

namespace lpvslc {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lpvslc_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(Json, PlantRoundTrip) {
  const auto model = benchmark_plant();
  const auto back = plant_from_json(to_json(model));
  EXPECT_EQ(to_json(back), to_json(model));
  const SchedulingPoint p{0.02, 0.13};
  const auto a = frozen_realization(model, p), b = frozen_realization(back, p);
  EXPECT_TRUE(a.a.isApprox(b.a, 0.0));
  EXPECT_TRUE(a.b.isApprox(b.b, 0.0));
  EXPECT_TRUE(a.c.isApprox(b.c, 0.0));
}

TEST(Json, PlantErrorsNameTheProblem) {
  json j = to_json(benchmark_plant());
  j.erase("sensor_xy");
  EXPECT_THROW(plant_from_json(j), ConfigError);
  j = to_json(benchmark_plant());
  j["modes"][0]["axis"] = "yaw";
  EXPECT_THROW(plant_from_json(j), ConfigError);
  j = to_json(benchmark_plant());
  j["damping"][3] = -0.5;
  EXPECT_THROW(plant_from_json(j), ConfigError);
}

TEST(Json, DesignSpecRoundTrip) {
  auto s = benchmark_design_spec();
  s.grid = FrequencyGrid::logspace(2.0, 3000.0, 77);
  s.notch.skews = {1.0, 1.5};
  const auto back = design_spec_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_EQ(back.loops[0].scheduled, true);
  EXPECT_EQ(back.grid.hz, s.grid.hz);

  const auto g = grid_from_json(json{{"f_min_hz", 1.0}, {"f_max_hz", 100.0}, {"points", 3}});
  ASSERT_EQ(g.size(), 3u);
  EXPECT_NEAR(g.hz[1], 10.0, 1e-12);
  EXPECT_THROW(grid_from_json(json{{"hz", {5.0, 1.0}}}), ConfigError);
}

TEST(Json, ControllerSetRoundTrip) {
  ControllerSet c;
  c.kind = "lpv";
  c.names = {"z"};
  CoefficientSurface f1;
  f1.order_i = 2;
  f1.order_j = 1;
  f1.theta = Eigen::Vector2d(230.0, -12.0);
  f1.norm = Normalization::from_box({0.0, 0.2, 0.0, 0.2});
  f1.units = "Hz";
  c.loops = {Cascade::partitioned(
      {Gain{3e5}, Integrator{20.0}, Lead{100.0, 3.0}, Notch{480.0, 500.0, 0.01, 0.3}},
      {LpvNotch{CoefficientSurface::constant(0.05), CoefficientSurface::constant(0.5), f1,
                CoefficientSurface::constant(260.0, "Hz")}})};
  c.bandwidth_hz = {100.0};
  c.dec = {Eigen::MatrixXd::Constant(4, 1, 0.25), Eigen::MatrixXd::Constant(1, 3, 1.0 / 3.0)};
  const auto back = controllers_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_TRUE(back.scheduled());
  const auto grid = FrequencyGrid::logspace(1.0, 2000.0, 50);
  const SchedulingPoint p{0.15, 0.05};
  EXPECT_TRUE(back.frf_at(p, grid)[0].values.isApprox(c.frf_at(p, grid)[0].values, 0.0));
  EXPECT_TRUE(back.dec.tu.isApprox(c.dec.tu, 0.0));

  json bad = to_json(c);
  bad["loops"][0]["gamma"][0]["type"] = "pid";
  EXPECT_THROW(controllers_from_json(bad), ConfigError);
}

TEST(Json, ReferenceAndSimConfigRoundTrip) {
  const auto r = benchmark_reference();
  const auto rb = reference_from_json(to_json(r));
  EXPECT_EQ(to_json(rb), to_json(r));
  SimConfig c;
  c.scheduling = SchedulingSource::measured_delayed;
  c.feedforward = false;
  c.metric_axis = "ry";
  const auto cb = sim_config_from_json(to_json(c));
  EXPECT_EQ(cb.scheduling, SchedulingSource::measured_delayed);
  EXPECT_FALSE(cb.feedforward);
  EXPECT_EQ(to_json(cb), to_json(c));
  EXPECT_THROW(sim_config_from_json(json{{"scheduling_source", "encoder"}}), ConfigError);
}

TEST(Json, DesignSetRoundTrip) {
  FrozenDesignSet d;
  d.samples = {{{0.0, 0.1}, 231.5, "Hz"}, {{0.2, 0.1}, 229.0, "Hz"}};
  const auto back = design_set_from_json(to_json(d));
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(back.samples[1].value, 229.0);
  EXPECT_EQ(back.samples[1].p, (SchedulingPoint{0.2, 0.1}));
  EXPECT_EQ(back.samples[0].units, "Hz");
}

TEST(Files, ProjectPathsResolveAgainstTheConfigDirectory) {
  const auto dir = scratch_dir("project");
  fs::create_directories(dir / "sub");
  for (const char* f : {"plant.json", "design.json", "traj.json", "sim.json"})
    std::ofstream(dir / "sub" / f) << "{}";
  write_json_file(dir / "sub" / "project.json",
                  json{{"plant", "plant.json"}, {"design", "design.json"}, {"trajectory", "traj.json"},
                       {"sim", "sim.json"}});
  const auto pc = ProjectConfig::load(dir / "sub" / "project.json");
  EXPECT_EQ(pc.plant, dir / "sub" / "plant.json");
  EXPECT_EQ(pc.out, fs::path("out"));
  fs::remove(dir / "sub" / "sim.json");
  EXPECT_THROW(ProjectConfig::load(dir / "sub" / "project.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{\"plant\": ";
  EXPECT_THROW(read_json_file(dir / "broken.json"), ConfigError);
  EXPECT_THROW(read_json_file(dir / "missing.json"), ConfigError);
}

TEST(Summary, KeysAndZeroReductionForIdenticalRuns) {
  const IntervalMetrics m{3e-10, 4e-8, 100};
  const auto s = comparison_summary({{"lti", m}, {"lti_again", m}}, "z",
                                    {"constant_velocity", 0.2, 0.9}, SimConfig{});
  for (const char* key : {"axis", "window_s", "interval", "reference", "runs", "config"})
    EXPECT_TRUE(s.contains(key)) << key;
  EXPECT_EQ(s["window_s"].get<double>(), 0.005);
  ASSERT_EQ(s["runs"].size(), 2u);
  EXPECT_EQ(s["runs"][1]["reduction_pct"]["ma"].get<double>(), 0.0);
  EXPECT_EQ(s["runs"][1]["reduction_pct"]["msd"].get<double>(), 0.0);
  EXPECT_EQ(s["runs"][0]["ma_m"].get<double>(), 3e-10);

  const auto z = comparison_summary({{"a", IntervalMetrics{0.0, 0.0, 5}}, {"b", m}}, "z",
                                    {"constant_velocity", 0.2, 0.9}, SimConfig{});
  EXPECT_TRUE(z["runs"][1]["reduction_pct"]["ma"].is_null());
  EXPECT_THROW(comparison_summary({}, "z", {}, SimConfig{}), ConfigError);
}

TEST(Files, SimCsvLayout) {
  SimResult r;
  r.axes = {"z", "rx"};
  r.t = {0.0, 1e-4};
  r.p = {{0.1, 0.1}, {0.1, 0.1}};
  r.r = r.y = r.e = r.u = Eigen::MatrixXd::Constant(2, 2, 1.0 / 3.0);
  r.ma = r.msd = Eigen::MatrixXd::Constant(2, 2, NAN);
  std::ostringstream os;
  write_sim_csv(os, r);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "t,px,py,r_z,y_z,e_z,u_z,ma_z,msd_z,r_rx,y_rx,e_rx,u_rx,ma_rx,msd_rx");
  EXPECT_NE(row.find("0.33333333333333331"), std::string::npos);
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), 14);
  EXPECT_EQ(axis_index(r, "rx"), 1);
  EXPECT_THROW(axis_index(r, "ry"), ConfigError);
}

}  // namespace
}  // namespace lpvslc

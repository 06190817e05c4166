#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "lpvslc/design.h"
#include "lpvslc/errors.h"
#include "lpvslc/io.h"
#include "lpvslc/log.h"
#include "lpvslc/sim.h"
#include "lpvslc/trajectory.h"

namespace fs = std::filesystem;
using namespace lpvslc;

namespace {

struct Options {
  std::string config = "configs/project.json";
  std::string out;
  std::string mode = "both";
  std::string grid;
  std::string positions;
  std::string designs;
  int jobs = 0;
};

struct Project {
  ProjectConfig paths;
  fs::path out;
};

Project load_project(const Options& o) {
  Project p;
  p.paths = ProjectConfig::load(o.config);
  p.out = o.out.empty() ? p.paths.out : fs::path(o.out);
  fs::create_directories(p.out);
  return p;
}

std::vector<std::string> modes_of(const std::string& mode) {
  if (mode == "both") return {"lti", "lpv"};
  if (mode == "lti" || mode == "lpv") return {mode};
  throw ConfigError("--mode must be lti, lpv or both");
}

FrequencyGrid parse_grid(const std::string& s) {
  double lo = 0.0, hi = 0.0;
  int n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  if (!(in >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':')
    throw ConfigError("--grid expects f_min:f_max:points, got '" + s + "'");
  return FrequencyGrid::logspace(lo, hi, n);
}

// "x,y;x,y" or "NxM" (uniform grid over the workspace).
std::vector<SchedulingPoint> parse_positions(const std::string& s, const Box& ws) {
  std::vector<SchedulingPoint> out;
  int nx = 0, ny = 0;
  char x = 0;
  std::istringstream grid_in(s);
  if (s.find(',') == std::string::npos && (grid_in >> nx >> x >> ny) && x == 'x') return ws.grid(nx, ny);
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.empty()) continue;
    std::istringstream pin(item);
    SchedulingPoint p;
    char comma = 0;
    if (!(pin >> p.qx >> comma >> p.qy) || comma != ',')
      throw ConfigError("--positions expects 'x,y;x,y' or 'NxM', got '" + item + "'");
    out.push_back(p);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

int cmd_frf(const Options& o) {
  const auto pr = load_project(o);
  const auto model = plant_from_json(read_json_file(pr.paths.plant));
  const auto grid = o.grid.empty() ? FrequencyGrid::default_grid() : parse_grid(o.grid);
  const auto points = parse_positions(o.positions.empty() ? "1x1" : o.positions, model.workspace);
  if (points.empty()) throw ConfigError("--positions is empty");
  const auto dec = rigid_body_decouple(model, model.workspace.center());
  const auto plants = sample_plant(model, dec, points, grid, std::max(1, o.jobs));

  auto all = open_out(pr.out / "frf_all.csv");
  all << "position,qx,qy,freq_hz";
  const auto n = plants.front().frf.rows();
  for (int r = 1; r <= n; ++r)
    for (int c = 1; c <= plants.front().frf.cols(); ++c) all << ",re_" << r << c << ",im_" << r << c;
  all << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < plants.size(); ++k) {
    auto os = open_out(pr.out / ("frf_" + std::to_string(k) + ".csv"));
    write_frf_csv(os, plants[k].frf);
    const auto& f = plants[k].frf;
    for (std::size_t w = 0; w < f.grid.size(); ++w) {
      all << k << ',' << plants[k].p.qx << ',' << plants[k].p.qy << ',' << f.grid.hz[w];
      for (int r = 0; r < f.rows(); ++r)
        for (int c = 0; c < f.cols(); ++c) all << ',' << f.values[w](r, c).real() << ',' << f.values[w](r, c).imag();
      all << '\n';
    }
  }
  std::cout << "wrote " << plants.size() << " FRF files to " << pr.out.string() << '\n';
  return 0;
}

DesignSpec load_design_spec(const Project& pr, const Options& o) {
  auto spec = design_spec_from_json(read_json_file(pr.paths.design));
  if (o.jobs > 0) spec.jobs = o.jobs;
  if (!o.grid.empty()) spec.grid = parse_grid(o.grid);
  return spec;
}

int cmd_design(const Options& o) {
  const auto pr = load_project(o);
  const auto model = plant_from_json(read_json_file(pr.paths.plant));
  const auto spec = load_design_spec(pr, o);
  std::vector<std::pair<std::string, double>> achieved;
  bool certified = true;
  for (const auto& mode : modes_of(o.mode)) {
    const auto res = mode == "lti" ? design_lti_slc(model, spec) : design_lpv_slc(model, spec);
    write_json_file(pr.out / ("controllers_" + mode + ".json"), to_json(res.controllers));
    write_json_file(pr.out / ("certification_" + mode + ".json"), to_json(res.certification));
    write_json_file(pr.out / ("design_" + mode + ".json"), to_json(res));
    for (const auto& l : res.loops)
      std::cout << mode << "  loop " << l.name << ": bandwidth " << std::setprecision(6) << l.bandwidth_hz
                << " Hz (" << l.limit << ")\n";
    std::cout << mode << "  certification: " << (res.certification.passed ? "passed" : "FAILED") << '\n';
    certified = certified && res.certification.passed;
    achieved.emplace_back(mode, res.controllers.bandwidth_hz.empty() ? 0.0 : res.controllers.bandwidth_hz.front());
  }
  if (achieved.size() == 2 && achieved[0].second > 0.0)
    std::cout << "bandwidth ratio lpv/lti: " << achieved[1].second / achieved[0].second << '\n';
  return certified ? 0 : 1;
}

int cmd_fit(const Options& o) {
  const auto pr = load_project(o);
  if (o.designs.empty()) throw ConfigError("fit needs --designs <frozen designs JSON>");
  const auto model = plant_from_json(read_json_file(pr.paths.plant));
  const auto spec = load_design_spec(pr, o);
  const auto set = design_set_from_json(read_json_file(o.designs));
  const auto fit = fit_surface(set, spec.surface_order_i, spec.surface_order_j, Normalization::from_box(model.workspace));
  json j = to_json(fit.surface);
  j["report"] = {{"residuals", fit.report.residuals},
                 {"residual_norm_sq", fit.report.residual_norm_sq},
                 {"rank", fit.report.rank},
                 {"condition", fit.report.condition},
                 {"rank_deficient", fit.report.rank_deficient}};
  const auto path = pr.out / ("surface_" + fs::path(o.designs).stem().string() + ".json");
  write_json_file(path, j);
  std::cout << "rank " << fit.report.rank << ", residual^2 " << fit.report.residual_norm_sq << " -> "
            << path.string() << '\n';
  return 0;
}

ControllerSet load_controllers(const Project& pr, const std::string& mode) {
  const auto path = pr.out / ("controllers_" + mode + ".json");
  if (!fs::exists(path)) throw ConfigError("missing controller file " + path.string() + " (run design first)");
  return controllers_from_json(read_json_file(path));
}

int cmd_certify(const Options& o) {
  const auto pr = load_project(o);
  const auto model = plant_from_json(read_json_file(pr.paths.plant));
  const auto spec = load_design_spec(pr, o);
  bool ok = true;
  for (const auto& mode : modes_of(o.mode)) {
    const auto c = load_controllers(pr, mode);
    const auto points = model.workspace.grid(spec.verify_nx, spec.verify_ny);
    const auto plants = sample_plant(model, c.dec, points, spec.grid, spec.jobs);
    const auto rep = certify(plants, c, spec, true);
    write_json_file(pr.out / ("certification_" + mode + ".json"), to_json(rep));
    double worst = -1e300;
    for (const auto& v : rep.points)
      for (double s : v.sensitivity_peak_db) worst = std::max(worst, s);
    std::cout << mode << "  certification: " << (rep.passed ? "passed" : "FAILED") << ", worst sensitivity peak "
              << worst << " dB, oracle " << (rep.oracle_agrees ? "agrees" : "DISAGREES") << '\n';
    ok = ok && rep.passed && rep.oracle_agrees;
  }
  return ok ? 0 : 1;
}

int cmd_trajectory(const Options& o) {
  const auto pr = load_project(o);
  const auto spec = reference_from_json(read_json_file(pr.paths.trajectory));
  const auto cfg = sim_config_from_json(read_json_file(pr.paths.sim));
  const Reference ref(spec, cfg.sample_rate);
  auto os = open_out(pr.out / "trajectory.csv");
  write_profile_csv(os, ref.profile(), cfg.sample_rate);
  const auto& p = ref.profile();
  std::cout << "duration " << p.duration() << " s (snap " << p.t_snap << ", jerk " << p.t_jerk << ", acc "
            << p.t_acc << ", vel " << p.t_vel << ")\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto pr = load_project(o);
  const auto model = plant_from_json(read_json_file(pr.paths.plant));
  const auto spec = reference_from_json(read_json_file(pr.paths.trajectory));
  const auto cfg = sim_config_from_json(read_json_file(pr.paths.sim));
  const Reference ref(spec, cfg.sample_rate);
  for (const auto& mode : modes_of(o.mode)) {
    const auto c = load_controllers(pr, mode);
    const auto cert = pr.out / ("certification_" + mode + ".json");
    if (!fs::exists(cert) || !read_json_file(cert).value("passed", false))
      log().warn("controller set '{}' is not certified", mode);
    const auto res = simulate(model, c, ref, cfg);
    auto os = open_out(pr.out / ("sim_" + mode + ".csv"));
    write_sim_csv(os, res);
    const auto m = interval_metrics(res, axis_index(res, cfg.metric_axis), constant_velocity_interval(res));
    std::cout << mode << "  mean |MA| " << std::setprecision(5) << m.mean_abs_ma << " m, mean MSD " << m.mean_msd
              << " m\n";
  }
  return 0;
}

// Re-derives the interval metrics from the simulation CSVs.
IntervalMetrics metrics_from_csv(const fs::path& path, const std::string& axis, const SimConfig& cfg,
                                 const Interval& interval) {
  std::ifstream in(path);
  if (!in) throw ConfigError("missing simulation file " + path.string() + " (run simulate first)");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string h;
    while (std::getline(hs, h, ',')) header.push_back(h);
  }
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "e_" + axis) col = i;
  if (col == header.size()) throw ConfigError(path.string() + ": no column e_" + axis);
  SimResult r;
  r.axes = {axis};
  std::vector<double> e;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() <= col) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": short row");
    try {
      r.t.push_back(std::stod(cells[0]));
      e.push_back(std::stod(cells[col]));
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  const auto mm = ma_msd(e, cfg.dt(), cfg.window);
  const auto n = static_cast<Eigen::Index>(e.size());
  r.ma = Eigen::Map<const Eigen::VectorXd>(mm.ma.data(), n);
  r.msd = Eigen::Map<const Eigen::VectorXd>(mm.msd.data(), n);
  return interval_metrics(r, 0, interval);
}

int cmd_metrics(const Options& o) {
  const auto pr = load_project(o);
  const auto spec = reference_from_json(read_json_file(pr.paths.trajectory));
  const auto cfg = sim_config_from_json(read_json_file(pr.paths.sim));
  const Reference ref(spec, cfg.sample_rate);
  Interval cv;
  bool found = false;
  for (const auto& i : ref.intervals(cfg.settling))
    if (i.kind == "constant_velocity") cv = i, found = true;
  if (!found) throw ConfigError("the trajectory has no constant-velocity interval after settling");

  std::vector<RunSummary> runs;
  for (const auto& mode : modes_of(o.mode))
    runs.push_back({mode, metrics_from_csv(pr.out / ("sim_" + mode + ".csv"), cfg.metric_axis, cfg, cv)});
  const auto summary = comparison_summary(runs, cfg.metric_axis, cv, cfg);
  write_json_file(pr.out / "summary.json", summary);

  std::cout << std::left << std::setw(8) << "" << std::setw(16) << "mean MA [m]" << std::setw(16) << "mean MSD [m]"
            << "reduction MA / MSD\n";
  for (const auto& row : summary["runs"]) {
    auto pct = [](const json& v) {
      if (v.is_null()) return std::string("n/a");
      std::ostringstream s;
      s << std::setprecision(4) << v.get<double>() << " %";
      return s.str();
    };
    const std::string red = pct(row["reduction_pct"]["ma"]) + " / " + pct(row["reduction_pct"]["msd"]);
    std::cout << std::setw(8) << row["name"].get<std::string>() << std::setw(16) << std::setprecision(5)
              << row["ma_m"].get<double>() << std::setw(16) << row["msd_m"].get<double>() << red << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LPV sequential loop closing: design and simulation"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "project configuration JSON")->capture_default_str();
  app.add_option("--out", o.out, "output directory (overrides the project setting)");
  app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);

  auto* frf = app.add_subcommand("frf", "frozen-position decoupled FRFs");
  frf->add_option("--positions", o.positions, "'x,y;x,y' or a workspace grid 'NxM'");
  frf->add_option("--grid", o.grid, "frequency grid f_min:f_max:points");
  auto* design = app.add_subcommand("design", "sequential loop-closing design");
  design->add_option("--mode", o.mode, "lti, lpv or both")->capture_default_str();
  design->add_option("--grid", o.grid, "frequency grid f_min:f_max:points");
  auto* fit = app.add_subcommand("fit", "least-squares coefficient surface from frozen designs");
  fit->add_option("--designs", o.designs, "frozen designs JSON")->required();
  auto* cert = app.add_subcommand("certify", "frozen-position certification of designed controllers");
  cert->add_option("--mode", o.mode, "lti, lpv or both")->capture_default_str();
  cert->add_option("--grid", o.grid, "frequency grid f_min:f_max:points");
  app.add_subcommand("trajectory", "reference profile CSV");
  auto* sim = app.add_subcommand("simulate", "closed-loop simulation");
  sim->add_option("--mode", o.mode, "lti, lpv or both")->capture_default_str();
  auto* met = app.add_subcommand("metrics", "MA/MSD comparison table");
  met->add_option("--mode", o.mode, "lti, lpv or both")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (const char* lvl = std::getenv("LPVSLC_LOG")) set_log_level(lvl);
    if (*frf) return cmd_frf(o);
    if (*design) return cmd_design(o);
    if (*fit) return cmd_fit(o);
    if (*cert) return cmd_certify(o);
    if (*sim) return cmd_simulate(o);
    if (*met) return cmd_metrics(o);
    return cmd_trajectory(o);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

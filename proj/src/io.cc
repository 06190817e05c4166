#include "lpvslc/io.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lpvslc/errors.h"

namespace lpvslc {

namespace {

template <typename T>
T req(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": bad value for '" + key + "': " + e.what());
  }
}

template <typename T>
T opt(const json& j, const char* key, const T& fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return req<T>(j, key, where);
}

Point2 point_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + ": expected [x, y]");
  try {
    return {j[0].get<double>(), j[1].get<double>()};
  } catch (const json::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

Box box_from(const json& j, const std::string& where) {
  const auto x = req<std::vector<double>>(j, "x", where);
  const auto y = req<std::vector<double>>(j, "y", where);
  if (x.size() != 2 || y.size() != 2) throw ConfigError(where + ": x and y must be [min, max]");
  return {x[0], x[1], y[0], y[1]};
}

json box_json(const Box& b) { return {{"x", {b.x_min, b.x_max}}, {"y", {b.y_min, b.y_max}}}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& where) {
  std::vector<std::vector<double>> rows;
  try {
    rows = j.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": expected a matrix: " + e.what());
  }
  const auto cols = rows.empty() ? 0 : rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ConfigError(where + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

json point_json(const SchedulingPoint& p) { return json::array({p.qx, p.qy}); }

SchedulingPoint sp_from(const json& j, const std::string& where) {
  const auto pt = point_from(j, where);
  return {pt.x, pt.y};
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ModalPlantModel plant_from_json(const json& j) {
  const std::string w = "plant";
  ModalPlantModel m;
  const auto modes = req<json>(j, "modes", w);
  const auto freqs = req<std::vector<double>>(j, "frequencies_hz", w);
  const auto damping = req<std::vector<double>>(j, "damping", w);
  if (!modes.is_array() || freqs.size() != modes.size() || damping.size() != modes.size())
    throw ConfigError("plant: modes, frequencies_hz and damping must have equal length");
  for (std::size_t k = 0; k < modes.size(); ++k) {
    const std::string mw = "plant.modes[" + std::to_string(k) + "]";
    const auto type = req<std::string>(modes[k], "type", mw);
    if (type == "rigid") {
      if (freqs[k] != 0.0) throw ConfigError(mw + ": rigid modes need frequency 0");
      RigidMode r;
      r.axis = parse_axis(req<std::string>(modes[k], "axis", mw));
      r.mass = req<double>(modes[k], "mass", mw);
      m.rigid.push_back(r);
    } else if (type == "flexible") {
      FlexibleMode f;
      f.freq_hz = freqs[k];
      f.damping = damping[k];
      f.kx = req<int>(modes[k], "kx", mw);
      f.ky = req<int>(modes[k], "ky", mw);
      f.modal_mass = opt<double>(modes[k], "modal_mass", 1.0, mw);
      m.flexible.push_back(f);
    } else {
      throw ConfigError(mw + ": unknown mode type '" + type + "'");
    }
  }
  for (const auto& p : req<json>(j, "actuator_xy", w)) m.actuators.push_back(point_from(p, "plant.actuator_xy"));
  for (const auto& p : req<json>(j, "sensor_xy", w)) m.sensors.push_back(point_from(p, "plant.sensor_xy"));
  m.workspace = box_from(req<json>(j, "workspace", w), "plant.workspace");
  m.shape_box = box_from(req<json>(j, "shape_box", w), "plant.shape_box");
  m.actuator_shift = opt<double>(j, "actuator_shift", 1.0, w);
  m.sensor_shift = opt<double>(j, "sensor_shift", -1.0, w);
  m.validate();
  return m;
}

json to_json(const ModalPlantModel& m) {
  json modes = json::array(), freqs = json::array(), damping = json::array();
  for (const auto& r : m.rigid) {
    modes.push_back({{"type", "rigid"}, {"axis", axis_name(r.axis)}, {"mass", r.mass}});
    freqs.push_back(0.0);
    damping.push_back(0.0);
  }
  for (const auto& f : m.flexible) {
    modes.push_back({{"type", "flexible"}, {"kx", f.kx}, {"ky", f.ky}, {"modal_mass", f.modal_mass}});
    freqs.push_back(f.freq_hz);
    damping.push_back(f.damping);
  }
  json act = json::array(), sen = json::array();
  for (const auto& a : m.actuators) act.push_back({a.x, a.y});
  for (const auto& s : m.sensors) sen.push_back({s.x, s.y});
  return {{"modes", modes},         {"frequencies_hz", freqs},
          {"damping", damping},     {"actuator_xy", act},
          {"sensor_xy", sen},       {"workspace", box_json(m.workspace)},
          {"shape_box", box_json(m.shape_box)}, {"actuator_shift", m.actuator_shift},
          {"sensor_shift", m.sensor_shift}};
}

FrequencyGrid grid_from_json(const json& j) {
  FrequencyGrid g;
  if (j.contains("hz")) {
    g.hz = req<std::vector<double>>(j, "hz", "grid");
  } else {
    g = FrequencyGrid::logspace(req<double>(j, "f_min_hz", "grid"), req<double>(j, "f_max_hz", "grid"),
                                req<int>(j, "points", "grid"));
  }
  g.validate();
  return g;
}

json to_json(const FrequencyGrid& g) { return {{"hz", g.hz}}; }

DesignSpec design_spec_from_json(const json& j) {
  const std::string w = "design";
  DesignSpec s;
  for (const auto& l : req<json>(j, "loops", w)) {
    LoopSpec ls;
    ls.name = req<std::string>(l, "name", "design.loops");
    ls.bandwidth_cap_hz = req<double>(l, "bandwidth_cap_hz", "design.loops");
    ls.bandwidth_min_hz = req<double>(l, "bandwidth_min_hz", "design.loops");
    ls.scheduled = opt<bool>(l, "scheduled", false, "design.loops");
    s.loops.push_back(ls);
  }
  s.loop_order = req<std::vector<int>>(j, "loop_order", w);
  s.sensitivity_bound_db = opt<double>(j, "sensitivity_bound_db", s.sensitivity_bound_db, w);
  s.alpha = opt<double>(j, "alpha", s.alpha, w);
  s.integrator_ratio = opt<double>(j, "integrator_ratio", s.integrator_ratio, w);
  if (j.contains("design_grid")) {
    const auto g = req<std::vector<int>>(j, "design_grid", w);
    if (g.size() != 2) throw ConfigError("design.design_grid must be [nx, ny]");
    s.design_nx = g[0];
    s.design_ny = g[1];
  }
  if (j.contains("verify_grid")) {
    const auto g = req<std::vector<int>>(j, "verify_grid", w);
    if (g.size() != 2) throw ConfigError("design.verify_grid must be [nx, ny]");
    s.verify_nx = g[0];
    s.verify_ny = g[1];
  }
  if (j.contains("frequency_grid")) s.grid = grid_from_json(j.at("frequency_grid"));
  if (j.contains("surface_order")) {
    const auto o = req<std::vector<int>>(j, "surface_order", w);
    if (o.size() != 2) throw ConfigError("design.surface_order must be [i, j]");
    s.surface_order_i = o[0];
    s.surface_order_j = o[1];
  }
  s.fit_tolerance = opt<double>(j, "fit_tolerance", s.fit_tolerance, w);
  s.bisection_iterations = opt<int>(j, "bisection_iterations", s.bisection_iterations, w);
  s.jobs = opt<int>(j, "jobs", s.jobs, w);
  if (j.contains("notch_search")) {
    const auto& n = j.at("notch_search");
    const std::string nw = "design.notch_search";
    s.notch.skews = opt<std::vector<double>>(n, "skews", s.notch.skews, nw);
    s.notch.beta2 = opt<std::vector<double>>(n, "beta2", s.notch.beta2, nw);
    s.notch.beta1_ratio = opt<std::vector<double>>(n, "beta1_ratio", s.notch.beta1_ratio, nw);
    s.notch.peak_threshold = opt<double>(n, "peak_threshold", s.notch.peak_threshold, nw);
    s.notch.rigid_line_max_hz = opt<double>(n, "rigid_line_max_hz", s.notch.rigid_line_max_hz, nw);
    s.notch.cluster_tolerance = opt<double>(n, "cluster_tolerance", s.notch.cluster_tolerance, nw);
    s.notch.max_notches = opt<int>(n, "max_notches", s.notch.max_notches, nw);
    s.notch.sweeps = opt<int>(n, "sweeps", s.notch.sweeps, nw);
  }
  return s;
}

json to_json(const DesignSpec& s) {
  json loops = json::array();
  for (const auto& l : s.loops)
    loops.push_back({{"name", l.name},
                     {"bandwidth_cap_hz", l.bandwidth_cap_hz},
                     {"bandwidth_min_hz", l.bandwidth_min_hz},
                     {"scheduled", l.scheduled}});
  const double f_lo = s.grid.hz.empty() ? 0.0 : s.grid.hz.front();
  const double f_hi = s.grid.hz.empty() ? 0.0 : s.grid.hz.back();
  return {{"loops", loops},
          {"loop_order", s.loop_order},
          {"sensitivity_bound_db", s.sensitivity_bound_db},
          {"alpha", s.alpha},
          {"integrator_ratio", s.integrator_ratio},
          {"design_grid", {s.design_nx, s.design_ny}},
          {"verify_grid", {s.verify_nx, s.verify_ny}},
          {"frequency_grid", {{"f_min_hz", f_lo}, {"f_max_hz", f_hi}, {"points", s.grid.size()}}},
          {"surface_order", {s.surface_order_i, s.surface_order_j}},
          {"fit_tolerance", s.fit_tolerance},
          {"bisection_iterations", s.bisection_iterations},
          {"jobs", s.jobs},
          {"notch_search",
           {{"skews", s.notch.skews},
            {"beta2", s.notch.beta2},
            {"beta1_ratio", s.notch.beta1_ratio},
            {"peak_threshold", s.notch.peak_threshold},
            {"rigid_line_max_hz", s.notch.rigid_line_max_hz},
            {"cluster_tolerance", s.notch.cluster_tolerance},
            {"max_notches", s.notch.max_notches},
            {"sweeps", s.notch.sweeps}}}};
}

CoefficientSurface surface_from_json(const json& j) {
  const std::string w = "surface";
  CoefficientSurface s;
  s.order_i = req<int>(j, "order_i", w);
  s.order_j = req<int>(j, "order_j", w);
  const auto theta = req<std::vector<double>>(j, "theta", w);
  s.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  s.units = opt<std::string>(j, "units", "", w);
  if (j.contains("normalization")) {
    const auto& n = j.at("normalization");
    s.norm.x_center = req<double>(n, "x_center", w);
    s.norm.x_half = req<double>(n, "x_half", w);
    s.norm.y_center = req<double>(n, "y_center", w);
    s.norm.y_half = req<double>(n, "y_half", w);
  }
  s.validate();
  return s;
}

json to_json(const CoefficientSurface& s) {
  return {{"order_i", s.order_i},
          {"order_j", s.order_j},
          {"theta", std::vector<double>(s.theta.data(), s.theta.data() + s.theta.size())},
          {"units", s.units},
          {"normalization",
           {{"x_center", s.norm.x_center},
            {"x_half", s.norm.x_half},
            {"y_center", s.norm.y_center},
            {"y_half", s.norm.y_half}}}};
}

FilterSpec filter_from_json(const json& j) {
  const std::string w = "filter";
  const auto type = req<std::string>(j, "type", w);
  FilterSpec f;
  if (type == "gain") {
    f = Gain{req<double>(j, "k", w)};
  } else if (type == "integrator") {
    Integrator i;
    if (j.contains("zero_hz") && !j.at("zero_hz").is_null()) i.zero_hz = req<double>(j, "zero_hz", w);
    f = i;
  } else if (type == "lead") {
    f = Lead{req<double>(j, "f_bw_hz", w), opt<double>(j, "alpha", 3.0, w)};
  } else if (type == "notch") {
    f = Notch{req<double>(j, "f1_hz", w), req<double>(j, "f2_hz", w), req<double>(j, "beta1", w),
              req<double>(j, "beta2", w)};
  } else if (type == "lpv_notch") {
    f = LpvNotch{surface_from_json(req<json>(j, "beta1", w)), surface_from_json(req<json>(j, "beta2", w)),
                 surface_from_json(req<json>(j, "f1_hz", w)), surface_from_json(req<json>(j, "f2_hz", w))};
  } else {
    throw ConfigError("filter: unknown type '" + type + "'");
  }
  validate(f);
  return f;
}

json to_json(const FilterSpec& f) {
  return std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Gain>) {
          return {{"type", "gain"}, {"k", e.k}};
        } else if constexpr (std::is_same_v<T, Integrator>) {
          json j{{"type", "integrator"}};
          j["zero_hz"] = e.zero_hz ? json(*e.zero_hz) : json(nullptr);
          return j;
        } else if constexpr (std::is_same_v<T, Lead>) {
          return {{"type", "lead"}, {"f_bw_hz", e.f_bw}, {"alpha", e.alpha}};
        } else if constexpr (std::is_same_v<T, Notch>) {
          return {{"type", "notch"}, {"f1_hz", e.f1}, {"f2_hz", e.f2}, {"beta1", e.beta1}, {"beta2", e.beta2}};
        } else {
          return {{"type", "lpv_notch"},
                  {"beta1", to_json(e.beta1)},
                  {"beta2", to_json(e.beta2)},
                  {"f1_hz", to_json(e.f1)},
                  {"f2_hz", to_json(e.f2)}};
        }
      },
      f);
}

ControllerSet controllers_from_json(const json& j) {
  const std::string w = "controllers";
  ControllerSet c;
  c.kind = req<std::string>(j, "kind", w);
  const auto loops = req<json>(j, "loops", w);
  for (const auto& l : loops) {
    c.names.push_back(req<std::string>(l, "name", "controllers.loops"));
    c.bandwidth_hz.push_back(opt<double>(l, "bandwidth_hz", 0.0, "controllers.loops"));
    std::vector<FilterSpec> gamma, psi;
    for (const auto& e : req<json>(l, "gamma", "controllers.loops")) gamma.push_back(filter_from_json(e));
    for (const auto& e : opt<json>(l, "psi", json::array(), "controllers.loops")) psi.push_back(filter_from_json(e));
    c.loops.push_back(Cascade::partitioned(std::move(gamma), std::move(psi)));
  }
  const auto& dec = req<json>(j, "decoupling", w);
  c.dec.tu = matrix_from(req<json>(dec, "tu", "controllers.decoupling"), "controllers.decoupling.tu");
  c.dec.ty = matrix_from(req<json>(dec, "ty", "controllers.decoupling"), "controllers.decoupling.ty");
  const auto n = static_cast<Eigen::Index>(c.loops.size());
  if (c.dec.tu.cols() != n || c.dec.ty.rows() != n)
    throw ConfigError("controllers: decoupling does not match the number of loops");
  for (const auto& l : c.loops) l.validate();
  return c;
}

json to_json(const ControllerSet& c) {
  json loops = json::array();
  for (std::size_t i = 0; i < c.loops.size(); ++i) {
    const auto& cas = c.loops[i];
    json gamma = json::array(), psi = json::array();
    for (std::size_t k = 0; k < cas.elements.size(); ++k)
      (k < cas.split ? gamma : psi).push_back(to_json(cas.elements[k]));
    loops.push_back({{"name", i < c.names.size() ? c.names[i] : std::to_string(i)},
                     {"bandwidth_hz", i < c.bandwidth_hz.size() ? c.bandwidth_hz[i] : 0.0},
                     {"gamma", gamma},
                     {"psi", psi}});
  }
  return {{"kind", c.kind},
          {"loops", loops},
          {"decoupling", {{"tu", matrix_json(c.dec.tu)}, {"ty", matrix_json(c.dec.ty)}}}};
}

json to_json(const CertificationReport& r) {
  json pts = json::array();
  for (const auto& v : r.points) {
    json crossover = json::array();
    for (double f : v.crossover_hz) crossover.push_back(std::isfinite(f) ? json(f) : json(nullptr));
    json pm = json::array();
    for (double f : v.phase_margin_deg) pm.push_back(std::isfinite(f) ? json(f) : json(nullptr));
    json pt{{"p", point_json(v.p)},
            {"encirclements", v.encirclements},
            {"sensitivity_peak_db", v.sensitivity_peak_db},
            {"crossover_hz", crossover},
            {"phase_margin_deg", pm},
            {"det_residual", v.det_residual},
            {"nyquist_stable", v.nyquist_stable},
            {"sensitivity_ok", v.sensitivity_ok},
            {"passed", v.passed}};
    pt["eigen_max_real"] = v.eigen_max_real ? json(*v.eigen_max_real) : json(nullptr);
    if (!v.failure.empty()) pt["failure"] = v.failure;
    pts.push_back(pt);
  }
  return {{"bound_db", r.bound_db}, {"passed", r.passed}, {"oracle_agrees", r.oracle_agrees}, {"points", pts}};
}

json to_json(const DesignResult& r) {
  json loops = json::array();
  for (const auto& l : r.loops)
    loops.push_back({{"name", l.name},
                     {"bandwidth_hz", l.bandwidth_hz},
                     {"rigid_mass", l.rigid_mass},
                     {"notch_slots_hz", l.slot_freq_hz},
                     {"limit", l.limit}});
  return {{"kind", r.controllers.kind}, {"loops", loops}, {"certified", r.certification.passed}};
}

json to_json(const StateSpace& ss) {
  return {{"a", matrix_json(ss.a)}, {"b", matrix_json(ss.b)}, {"c", matrix_json(ss.c)}, {"d", matrix_json(ss.d)}};
}

ReferenceSpec reference_from_json(const json& j) {
  const std::string w = "trajectory";
  ReferenceSpec r;
  r.start = sp_from(req<json>(j, "start_xy", w), "trajectory.start_xy");
  r.end = sp_from(req<json>(j, "end_xy", w), "trajectory.end_xy");
  const auto& b = req<json>(j, "bounds", w);
  r.bounds.v_max = req<double>(b, "v_max", "trajectory.bounds");
  r.bounds.a_max = req<double>(b, "a_max", "trajectory.bounds");
  r.bounds.j_max = req<double>(b, "j_max", "trajectory.bounds");
  r.bounds.s_max = req<double>(b, "s_max", "trajectory.bounds");
  r.bounds.validate();
  r.axis_displacement = req<std::vector<double>>(j, "axis_displacement", w);
  r.delay = opt<double>(j, "delay_s", 0.0, w);
  return r;
}

json to_json(const ReferenceSpec& r) {
  return {{"start_xy", point_json(r.start)},
          {"end_xy", point_json(r.end)},
          {"bounds",
           {{"v_max", r.bounds.v_max}, {"a_max", r.bounds.a_max}, {"j_max", r.bounds.j_max}, {"s_max", r.bounds.s_max}}},
          {"axis_displacement", r.axis_displacement},
          {"delay_s", r.delay}};
}

SimConfig sim_config_from_json(const json& j) {
  const std::string w = "sim";
  SimConfig c;
  c.sample_rate = opt<double>(j, "sample_rate_hz", c.sample_rate, w);
  c.duration = opt<double>(j, "duration_s", c.duration, w);
  const auto src = opt<std::string>(j, "scheduling_source", "reference", w);
  if (src == "reference") c.scheduling = SchedulingSource::reference;
  else if (src == "measured_delayed") c.scheduling = SchedulingSource::measured_delayed;
  else throw ConfigError("sim: unknown scheduling_source '" + src + "'");
  c.window = opt<double>(j, "window_s", c.window, w);
  c.settling = opt<double>(j, "settling_s", c.settling, w);
  c.divergence_limit = opt<double>(j, "divergence_limit", c.divergence_limit, w);
  c.feedback = opt<bool>(j, "feedback", c.feedback, w);
  c.feedforward = opt<bool>(j, "feedforward", c.feedforward, w);
  c.metric_axis = opt<std::string>(j, "metric_axis", c.metric_axis, w);
  return c;
}

json to_json(const SimConfig& c) {
  return {{"sample_rate_hz", c.sample_rate},
          {"duration_s", c.duration},
          {"scheduling_source", c.scheduling == SchedulingSource::reference ? "reference" : "measured_delayed"},
          {"window_s", c.window},
          {"settling_s", c.settling},
          {"divergence_limit", c.divergence_limit},
          {"feedback", c.feedback},
          {"feedforward", c.feedforward},
          {"metric_axis", c.metric_axis}};
}

FrozenDesignSet design_set_from_json(const json& j) {
  FrozenDesignSet d;
  const auto samples = j.is_array() ? j : req<json>(j, "samples", "designs");
  for (const auto& s : samples) {
    DesignSample ds;
    ds.p = sp_from(req<json>(s, "p", "designs.samples"), "designs.samples.p");
    ds.value = req<double>(s, "value", "designs.samples");
    ds.units = opt<std::string>(s, "units", "", "designs.samples");
    d.samples.push_back(ds);
  }
  return d;
}

json to_json(const FrozenDesignSet& d) {
  json s = json::array();
  for (const auto& x : d.samples) s.push_back({{"p", point_json(x.p)}, {"value", x.value}, {"units", x.units}});
  return {{"samples", s}};
}

ProjectConfig ProjectConfig::load(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const std::string w = path.string();
  auto resolve = [&](const char* key) {
    std::filesystem::path p = req<std::string>(j, key, w);
    if (p.is_relative()) p = base / p;
    if (!std::filesystem::exists(p)) throw ConfigError(w + ": '" + key + "' file not found: " + p.string());
    return p;
  };
  ProjectConfig c;
  c.plant = resolve("plant");
  c.design = resolve("design");
  c.trajectory = resolve("trajectory");
  c.sim = resolve("sim");
  c.out = opt<std::string>(j, "out", "out", w);
  return c;
}

void write_sim_csv(std::ostream& os, const SimResult& r) {
  os << "t,px,py";
  for (const auto& a : r.axes)
    for (const char* s : {"r_", "y_", "e_", "u_", "ma_", "msd_"}) os << ',' << s << a;
  os << '\n' << std::setprecision(17);
  const auto m = static_cast<Eigen::Index>(r.axes.size());
  for (std::size_t k = 0; k < r.t.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    os << r.t[k] << ',' << r.p[k].qx << ',' << r.p[k].qy;
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',' << r.r(row, i) << ',' << r.y(row, i) << ',' << r.e(row, i) << ',' << r.u(row, i);
      for (double v : {r.ma(row, i), r.msd(row, i)}) {
        os << ',';
        if (!std::isnan(v)) os << v;
      }
    }
    os << '\n';
  }
}

json comparison_summary(const std::vector<RunSummary>& runs, const std::string& axis,
                        const Interval& interval, const SimConfig& config) {
  if (runs.empty()) throw ConfigError("comparison needs at least one run");
  const auto& ref = runs.front().metrics;
  json rows = json::array();
  for (const auto& r : runs) {
    json red{{"ma", 0.0}, {"msd", 0.0}};
    if (&r != &runs.front()) {
      red["ma"] = ref.mean_abs_ma > 0.0 ? json(relative_reduction_pct(ref.mean_abs_ma, r.metrics.mean_abs_ma)) : json(nullptr);
      red["msd"] = ref.mean_msd > 0.0 ? json(relative_reduction_pct(ref.mean_msd, r.metrics.mean_msd)) : json(nullptr);
    }
    rows.push_back({{"name", r.name}, {"ma_m", r.metrics.mean_abs_ma}, {"msd_m", r.metrics.mean_msd}, {"reduction_pct", red}});
  }
  return {{"axis", axis},
          {"window_s", config.window},
          {"interval", {{"kind", interval.kind}, {"t0_s", interval.t0}, {"t1_s", interval.t1}}},
          {"reference", runs.front().name},
          {"runs", rows},
          {"config", to_json(config)}};
}

Interval constant_velocity_interval(const SimResult& r) {
  for (const auto& i : r.intervals)
    if (i.kind == "constant_velocity") return i;
  throw ConfigError("the trajectory has no constant-velocity interval after settling");
}

int axis_index(const SimResult& r, const std::string& axis) {
  for (std::size_t i = 0; i < r.axes.size(); ++i)
    if (r.axes[i] == axis) return static_cast<int>(i);
  throw ConfigError("unknown axis '" + axis + "'");
}

}  // namespace lpvslc

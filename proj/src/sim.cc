#include "lpvslc/sim.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lpvslc/errors.h"

namespace lpvslc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

long half_window_samples(double dt, double window) {
  const double h = window / (2.0 * dt);
  const long n = std::lround(h);
  if (n < 1 || std::abs(h - static_cast<double>(n)) > 1e-9 * std::max(1.0, h))
    throw ConfigError("window must be a positive even multiple of the sample period");
  return n;
}

// Block-diagonal stack of the per-loop controllers (SISO each).
struct StackedController {
  Eigen::MatrixXd a, b, c, d;
};

StackedController stack(const std::vector<StateSpace>& ks) {
  int n = 0;
  for (const auto& k : ks) n += k.order();
  const auto m = static_cast<Eigen::Index>(ks.size());
  StackedController s;
  s.a = Eigen::MatrixXd::Zero(n, n);
  s.b = Eigen::MatrixXd::Zero(n, m);
  s.c = Eigen::MatrixXd::Zero(m, n);
  s.d = Eigen::MatrixXd::Zero(m, m);
  int off = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& k = ks[static_cast<std::size_t>(i)];
    const int o = k.order();
    if (o > 0) {
      s.a.block(off, off, o, o) = k.a;
      s.b.block(off, i, o, 1) = k.b;
      s.c.block(i, off, 1, o) = k.c;
    }
    s.d(i, i) = k.d(0, 0);
    off += o;
  }
  return s;
}

// Closed loop over X = [x_plant; x_ctrl] driven by w = [r; u_ff]:
// X' = acl X + bcl w, with y = C xp, e = r - y, u = Dk e + Ck xk + u_ff.
struct FrozenLoop {
  Eigen::MatrixXd acl, bcl;
  Eigen::MatrixXd cp, ck, dk;
};

FrozenLoop close_loop(const StateSpace& plant, const StackedController& k, bool feedback) {
  const Eigen::Index np = plant.order(), nk = k.a.rows(), m = plant.inputs();
  FrozenLoop f;
  f.cp = plant.c;
  f.ck = feedback ? k.c : Eigen::MatrixXd::Zero(m, nk);
  f.dk = feedback ? k.d : Eigen::MatrixXd::Zero(m, m);
  f.acl = Eigen::MatrixXd::Zero(np + nk, np + nk);
  f.bcl = Eigen::MatrixXd::Zero(np + nk, 2 * m);
  f.acl.topLeftCorner(np, np) = plant.a - plant.b * f.dk * plant.c;
  f.acl.topRightCorner(np, nk) = plant.b * f.ck;
  f.bcl.topLeftCorner(np, m) = plant.b * f.dk;
  f.bcl.topRightCorner(np, m) = plant.b;
  if (feedback && nk > 0) {
    f.acl.bottomLeftCorner(nk, np) = -k.b * plant.c;
    f.acl.bottomRightCorner(nk, nk) = k.a;
    f.bcl.bottomLeftCorner(nk, m) = k.b;
  }
  return f;
}

}  // namespace

void SimConfig::validate(const ModalPlantModel& model) const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw ConfigError("sample rate must be positive");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("duration must be positive");
  double f_max = 0.0;
  for (const auto& f : model.flexible) f_max = std::max(f_max, f.freq_hz);
  if (!(sample_rate > 2.0 * f_max))
    throw ConfigError("sample rate must exceed twice the highest plant mode frequency");
  half_window_samples(dt(), window);
  if (!(settling >= 0.0)) throw ConfigError("settling duration must be non-negative");
  if (!(divergence_limit > 0.0)) throw ConfigError("divergence limit must be positive");
}

Reference::Reference(const ReferenceSpec& spec, double sample_rate) : spec_(spec) {
  if (!(spec.delay >= 0.0)) throw ConfigError("reference delay must be non-negative");
  const Eigen::Vector2d d(spec.end.qx - spec.start.qx, spec.end.qy - spec.start.qy);
  const double length = d.norm();
  double axis_max = 0.0;
  for (double a : spec.axis_displacement) {
    if (!std::isfinite(a)) throw ConfigError("axis displacement must be finite");
    axis_max = std::max(axis_max, std::abs(a));
  }
  if (length > 0.0) {
    scale_ = length;
    dir_ = d / length;
  } else {
    scale_ = axis_max;
  }
  if (scale_ > 0.0) profile_ = plan(scale_, spec.bounds, sample_rate);
  else spec.bounds.validate();
}

ReferenceSample Reference::at(double t) const {
  const auto n = static_cast<Eigen::Index>(spec_.axis_displacement.size());
  ReferenceSample out;
  out.pos = Eigen::VectorXd::Zero(n);
  out.acc = Eigen::VectorXd::Zero(n);
  out.p = spec_.start;
  if (!(scale_ > 0.0)) return out;
  const auto s = sample(profile_, t - spec_.delay);
  out.p.qx = spec_.start.qx + dir_.x() * s.pos;
  out.p.qy = spec_.start.qy + dir_.y() * s.pos;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = spec_.axis_displacement[static_cast<std::size_t>(i)] / scale_;
    out.pos(i) = ratio * s.pos;
    out.acc(i) = ratio * s.acc;
  }
  return out;
}

std::vector<Interval> Reference::intervals(double settling) const {
  std::vector<Interval> out;
  if (profile_.segments.empty()) return out;
  const auto& pr = profile_;
  const double t_acc = 4.0 * pr.t_snap + 2.0 * pr.t_jerk + pr.t_acc;
  const double a0 = spec_.delay;
  const double a1 = a0 + t_acc;
  const double d0 = a1 + pr.t_vel;
  const double d1 = d0 + t_acc;
  out.push_back({"acceleration", a0, a1});
  out.push_back({"settling", a1, std::min(a1 + settling, d0)});
  if (a1 + settling < d0) out.push_back({"constant_velocity", a1 + settling, d0});
  out.push_back({"acceleration", d0, d1});
  out.push_back({"settling", d1, d1 + settling});
  return out;
}

SimResult simulate(const ModalPlantModel& model, const ControllerSet& controllers,
                   const Reference& reference, const SimConfig& config,
                   const std::optional<Eigen::VectorXd>& initial_state) {
  config.validate(model);
  const int m = model.axes();
  if (static_cast<int>(controllers.loops.size()) != m)
    throw ConfigError("controller set does not match the plant axes");
  if (static_cast<int>(reference.spec().axis_displacement.size()) != m)
    throw ConfigError("reference needs one displacement per controlled axis");

  const double dt = config.dt();
  const long steps = std::lround(config.duration / dt);
  const NotchLimits limits = NotchLimits::for_step(dt);
  const bool scheduled = controllers.scheduled();
  const Eigen::VectorXd mass = model.mass_diagonal().head(m);

  std::optional<StackedController> lti_k;
  if (!scheduled) lti_k = stack(controllers.realize_at(model.workspace.center(), limits));

  auto frozen_at = [&](const SchedulingPoint& plant_p, const SchedulingPoint& ctrl_p) {
    const StateSpace plant = decoupled_realization(model, plant_p, controllers.dec);
    if (lti_k) return close_loop(plant, *lti_k, config.feedback);
    return close_loop(plant, stack(controllers.realize_at(ctrl_p, limits)), config.feedback);
  };

  auto position_at = [&](double t) {
    SchedulingPoint p = reference.at(t).p;
    if (!model.workspace.contains(p, 1e-9))
      throw DomainError("scheduling point left the workspace at t = " + std::to_string(t));
    p.qx = std::clamp(p.qx, model.workspace.x_min, model.workspace.x_max);
    p.qy = std::clamp(p.qy, model.workspace.y_min, model.workspace.y_max);
    return p;
  };

  auto input_at = [&](double t) {
    const auto s = reference.at(t);
    Eigen::VectorXd w(2 * m);
    w.head(m) = s.pos;
    w.tail(m) = config.feedforward ? Eigen::VectorXd(mass.cwiseProduct(s.acc)) : Eigen::VectorXd::Zero(m);
    return w;
  };

  const FrozenLoop probe = frozen_at(position_at(0.0), position_at(0.0));
  const Eigen::Index n = probe.acl.rows();
  const Eigen::Index np = probe.cp.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  if (initial_state) {
    if (initial_state->size() != n)
      throw ConfigError("initial state has size " + std::to_string(initial_state->size()) +
                        ", expected " + std::to_string(n));
    x = *initial_state;
  }

  SimResult res;
  for (int i = 0; i < m; ++i) res.axes.push_back(axis_name(model.rigid[static_cast<std::size_t>(i)].axis));
  const auto rows = static_cast<Eigen::Index>(steps + 1);
  res.r.resize(rows, m);
  res.y.resize(rows, m);
  res.e.resize(rows, m);
  res.u.resize(rows, m);
  res.t.reserve(static_cast<std::size_t>(rows));
  res.p.reserve(static_cast<std::size_t>(rows));
  res.state_norm.reserve(static_cast<std::size_t>(rows));
  res.window = config.window;

  // The plant sees the stage position; the controller sees the scheduling source.
  auto controller_point = [&](double t) {
    return config.scheduling == SchedulingSource::reference ? position_at(t)
                                                            : position_at(std::max(0.0, t - dt));
  };
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const SchedulingPoint p = position_at(t);
    const FrozenLoop now = frozen_at(p, controller_point(t));

    const Eigen::VectorXd w0 = input_at(t);
    const Eigen::VectorXd y = now.cp * x.head(np);
    const Eigen::VectorXd e = w0.head(m) - y;
    const Eigen::VectorXd u = now.dk * e + now.ck * x.tail(n - np) + w0.tail(m);
    res.t.push_back(t);
    res.p.push_back(p);
    res.r.row(k) = w0.head(m).transpose();
    res.y.row(k) = y.transpose();
    res.e.row(k) = e.transpose();
    res.u.row(k) = u.transpose();
    const double norm = x.norm();
    res.state_norm.push_back(norm);
    if (!(norm <= config.divergence_limit))
      throw NumericalError("simulation diverged at t = " + std::to_string(t) + " s (state norm " +
                           std::to_string(norm) + ")");
    if (k == steps) break;

    // Scheduling values held over [t, t + dt].
    const FrozenLoop f = frozen_at(position_at(t + 0.5 * dt), controller_point(t + 0.5 * dt));

    const Eigen::VectorXd wm = input_at(t + 0.5 * dt);
    const Eigen::VectorXd w1 = input_at(t + dt);
    const Eigen::VectorXd k1 = f.acl * x + f.bcl * w0;
    const Eigen::VectorXd k2 = f.acl * (x + 0.5 * dt * k1) + f.bcl * wm;
    const Eigen::VectorXd k3 = f.acl * (x + 0.5 * dt * k2) + f.bcl * wm;
    const Eigen::VectorXd k4 = f.acl * (x + dt * k3) + f.bcl * w1;
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  res.ma.resize(rows, m);
  res.msd.resize(rows, m);
  for (int i = 0; i < m; ++i) {
    std::vector<double> col(res.e.col(i).data(), res.e.col(i).data() + rows);
    const auto mm = ma_msd(col, dt, config.window);
    for (Eigen::Index k = 0; k < rows; ++k) {
      res.ma(k, i) = mm.ma[static_cast<std::size_t>(k)];
      res.msd(k, i) = mm.msd[static_cast<std::size_t>(k)];
    }
  }
  res.intervals = reference.intervals(config.settling);
  return res;
}

MaMsd ma_msd(const std::vector<double>& e, double dt, double window) {
  if (!(dt > 0.0)) throw ConfigError("sample period must be positive");
  const long h = half_window_samples(dt, window);
  const long n = static_cast<long>(e.size());
  if (2 * h + 1 > n) throw ConfigError("window is longer than the error series");
  MaMsd out;
  out.ma.assign(e.size(), kNaN);
  out.msd.assign(e.size(), kNaN);
  for (long k = h; k + h < n; ++k) {
    double s = 0.0;
    for (long j = k - h; j <= k + h; ++j) s += e[static_cast<std::size_t>(j)];
    s -= 0.5 * (e[static_cast<std::size_t>(k - h)] + e[static_cast<std::size_t>(k + h)]);
    const double ma = s * dt / window;
    double v = 0.0;
    for (long j = k - h; j <= k + h; ++j) {
      const double d = e[static_cast<std::size_t>(j)] - ma;
      v += (j == k - h || j == k + h ? 0.5 : 1.0) * d * d;
    }
    out.ma[static_cast<std::size_t>(k)] = ma;
    out.msd[static_cast<std::size_t>(k)] = std::sqrt(std::max(0.0, v * dt / window));
  }
  return out;
}

IntervalMetrics interval_metrics(const SimResult& result, int axis, const Interval& interval) {
  if (axis < 0 || axis >= result.ma.cols()) throw ConfigError("axis index out of range");
  IntervalMetrics m;
  const double tol = 1e-9;
  for (std::size_t k = 0; k < result.t.size(); ++k) {
    const double t = result.t[k];
    if (t < interval.t0 - tol || t > interval.t1 + tol) continue;
    const auto row = static_cast<Eigen::Index>(k);
    const double ma = result.ma(row, axis);
    if (std::isnan(ma)) continue;
    m.mean_abs_ma += std::abs(ma);
    m.mean_msd += result.msd(row, axis);
    ++m.samples;
  }
  if (m.samples == 0)
    throw ConfigError("interval [" + std::to_string(interval.t0) + ", " + std::to_string(interval.t1) +
                      "] contains no samples with a defined MA/MSD");
  m.mean_abs_ma /= static_cast<double>(m.samples);
  m.mean_msd /= static_cast<double>(m.samples);
  return m;
}

double relative_reduction_pct(double reference, double improved) {
  if (!(reference > 0.0)) throw DomainError("relative reduction needs a positive reference value");
  return 100.0 * (1.0 - improved / reference);
}

ReferenceSpec benchmark_reference() {
  ReferenceSpec r;
  r.start = {0.05, 0.1};
  r.end = {0.15, 0.1};
  r.bounds = {0.1, 1.0, 20.0, 1000.0};
  r.axis_displacement = {0.001, 0.0, 0.0};
  r.delay = 0.05;
  return r;
}

}  // namespace lpvslc

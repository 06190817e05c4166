#include "lpvslc/filters.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lpvslc/errors.h"
#include "lpvslc/log.h"

namespace lpvslc {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_notch(const Notch& n) {
  if (!(n.f1 > 0.0) || !(n.f2 > 0.0) || !std::isfinite(n.f1) || !std::isfinite(n.f2))
    throw ConfigError("notch frequencies must be positive and finite");
  if (!(n.beta2 > 0.0) || !(n.beta1 >= 0.0) || !std::isfinite(n.beta1) || !std::isfinite(n.beta2))
    throw ConfigError("notch damping must satisfy beta1 >= 0, beta2 > 0");
}

StateSpace notch_realization(const Notch& n) {
  check_notch(n);
  StateSpace ss;
  const double f2sq = n.f2 * n.f2;
  ss.a.resize(2, 2);
  ss.a << -4.0 * kPi * n.beta2 * n.f2, -4.0 * f2sq * kPi * kPi, 1.0, 0.0;
  ss.b.resize(2, 1);
  ss.b << 4.0 * f2sq * kPi * kPi, 0.0;
  ss.c.resize(1, 2);
  ss.c << (n.beta1 * n.f1 - n.beta2 * n.f2) / (n.f1 * n.f1 * kPi), 1.0 - f2sq / (n.f1 * n.f1);
  ss.d.resize(1, 1);
  ss.d << f2sq / (n.f1 * n.f1);
  return ss;
}

StateSpace scalar_system(double a, double b, double c, double d) {
  StateSpace ss;
  ss.a = Eigen::MatrixXd::Constant(1, 1, a);
  ss.b = Eigen::MatrixXd::Constant(1, 1, b);
  ss.c = Eigen::MatrixXd::Constant(1, 1, c);
  ss.d = Eigen::MatrixXd::Constant(1, 1, d);
  return ss;
}

StateSpace static_gain(double k) {
  StateSpace ss;
  ss.a.resize(0, 0);
  ss.b.resize(0, 1);
  ss.c.resize(1, 0);
  ss.d = Eigen::MatrixXd::Constant(1, 1, k);
  return ss;
}

const SchedulingPoint& require_point(const std::optional<SchedulingPoint>& p) {
  if (!p) throw ConfigError("scheduled filter evaluated without a scheduling point");
  return *p;
}

}  // namespace

bool is_lpv(const FilterSpec& spec) { return std::holds_alternative<LpvNotch>(spec); }

void validate(const FilterSpec& spec) {
  std::visit(overloaded{
                 [](const Gain& g) {
                   if (!std::isfinite(g.k)) throw ConfigError("gain must be finite");
                 },
                 [](const Integrator& i) {
                   if (i.zero_hz && !(*i.zero_hz > 0.0))
                     throw ConfigError("integrator zero frequency must be positive");
                 },
                 [](const Lead& l) {
                   if (!(l.f_bw > 0.0) || !(l.alpha > 0.0))
                     throw ConfigError("lead filter needs f_bw > 0 and alpha > 0");
                 },
                 [](const Notch& n) { check_notch(n); },
                 [](const LpvNotch& n) {
                   n.beta1.validate();
                   n.beta2.validate();
                   n.f1.validate();
                   n.f2.validate();
                 },
             },
             spec);
}

Cascade Cascade::lti(std::vector<FilterSpec> gamma) {
  Cascade c;
  c.elements = std::move(gamma);
  c.split = c.elements.size();
  c.validate();
  return c;
}

Cascade Cascade::partitioned(std::vector<FilterSpec> gamma, std::vector<FilterSpec> psi) {
  Cascade c;
  c.split = gamma.size();
  c.elements = std::move(gamma);
  for (auto& e : psi) c.elements.push_back(std::move(e));
  c.validate();
  return c;
}

void Cascade::validate() const {
  if (split > elements.size()) throw ConfigError("cascade partition marker out of range");
  for (std::size_t k = 0; k < elements.size(); ++k) {
    lpvslc::validate(elements[k]);
    if (k < split && is_lpv(elements[k]))
      throw ConfigError("scheduled filter inside the LTI part of a cascade");
    if (k >= split && !is_lpv(elements[k]))
      throw ConfigError("LTI filter inside the scheduled part of a cascade");
  }
}

cdouble notch_transfer(double f1, double f2, double beta1, double beta2, double omega) {
  check_notch({f1, f2, beta1, beta2});
  const double w1 = 2.0 * kPi * f1;
  const double w2 = 2.0 * kPi * f2;
  const cdouble s(0.0, omega);
  return (w2 * w2 / (w1 * w1)) * (s * s + 2.0 * beta1 * w1 * s + w1 * w1) /
         (s * s + 2.0 * beta2 * w2 * s + w2 * w2);
}

Eigen::ArrayXcd notch_frf(const Notch& n, const FrequencyGrid& grid) {
  check_notch(n);
  const double w1 = 2.0 * kPi * n.f1;
  const double w2 = 2.0 * kPi * n.f2;
  const double scale = w2 * w2 / (w1 * w1);
  Eigen::ArrayXcd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const cdouble s(0.0, grid.omega(k));
    out(static_cast<Eigen::Index>(k)) = scale * (s * s + 2.0 * n.beta1 * w1 * s + w1 * w1) /
                                        (s * s + 2.0 * n.beta2 * w2 * s + w2 * w2);
  }
  return out;
}

Notch evaluate_lpv_notch(const LpvNotch& spec, const SchedulingPoint& p, const NotchLimits& limits) {
  Notch n{eval_surface(spec.f1, p), eval_surface(spec.f2, p), eval_surface(spec.beta1, p),
          eval_surface(spec.beta2, p)};
  auto clamp = [&](double& f, const char* name) {
    if (f < limits.f_min || f > limits.f_max) {
      const double c = std::min(std::max(f, limits.f_min), limits.f_max);
      log().warn("scheduled notch {} = {} Hz at ({}, {}) clamped to {} Hz", name, f, p.qx, p.qy, c);
      f = c;
    }
  };
  clamp(n.f1, "f1");
  clamp(n.f2, "f2");
  if (!(n.beta1 >= 0.0) || !(n.beta2 > 0.0)) {
    std::ostringstream os;
    os << "scheduled notch damping out of range at (" << p.qx << ", " << p.qy
       << "): beta1 = " << n.beta1 << ", beta2 = " << n.beta2;
    throw DomainError(os.str());
  }
  return n;
}

cdouble element_response(const FilterSpec& spec, const std::optional<SchedulingPoint>& p,
                         double omega, const NotchLimits& limits) {
  const cdouble s(0.0, omega);
  return std::visit(
      overloaded{
          [&](const Gain& g) { return cdouble(g.k); },
          [&](const Integrator& i) {
            return i.zero_hz ? (s + 2.0 * kPi * *i.zero_hz) / s : 1.0 / s;
          },
          [&](const Lead& l) {
            const double a2 = l.alpha * l.alpha;
            return a2 * (s + 2.0 * kPi * l.f_bw / l.alpha) / (s + 2.0 * kPi * l.alpha * l.f_bw);
          },
          [&](const Notch& n) { return notch_transfer(n.f1, n.f2, n.beta1, n.beta2, omega); },
          [&](const LpvNotch& n) {
            const Notch v = evaluate_lpv_notch(n, require_point(p), limits);
            return notch_transfer(v.f1, v.f2, v.beta1, v.beta2, omega);
          },
      },
      spec);
}

StateSpace realize(const FilterSpec& spec, const std::optional<SchedulingPoint>& p,
                   const NotchLimits& limits) {
  validate(spec);
  return std::visit(
      overloaded{
          [&](const Gain& g) { return static_gain(g.k); },
          [&](const Integrator& i) {
            return i.zero_hz ? scalar_system(0.0, 1.0, 2.0 * kPi * *i.zero_hz, 1.0)
                             : scalar_system(0.0, 1.0, 1.0, 0.0);
          },
          [&](const Lead& l) {
            const double a = 2.0 * kPi * l.alpha * l.f_bw;
            const double a2 = l.alpha * l.alpha;
            return scalar_system(-a, a, 1.0 - a2, a2);
          },
          [&](const Notch& n) { return notch_realization(n); },
          [&](const LpvNotch& n) {
            return notch_realization(evaluate_lpv_notch(n, require_point(p), limits));
          },
      },
      spec);
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
  const int n1 = first.order();
  const int n2 = second.order();
  StateSpace s;
  s.a = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
  s.a.topLeftCorner(n1, n1) = first.a;
  s.a.bottomLeftCorner(n2, n1) = second.b * first.c;
  s.a.bottomRightCorner(n2, n2) = second.a;
  s.b.resize(n1 + n2, first.inputs());
  s.b.topRows(n1) = first.b;
  s.b.bottomRows(n2) = second.b * first.d;
  s.c.resize(second.outputs(), n1 + n2);
  s.c.leftCols(n1) = second.d * first.c;
  s.c.rightCols(n2) = second.c;
  s.d = second.d * first.d;
  return s;
}

StateSpace realize(const Cascade& c, const std::optional<SchedulingPoint>& p,
                   const NotchLimits& limits) {
  c.validate();
  StateSpace out = static_gain(1.0);
  for (const auto& e : c.elements) out = series(out, realize(e, p, limits));
  return out;
}

SisoFrf cascade_frf(const Cascade& c, const std::optional<SchedulingPoint>& p,
                    const FrequencyGrid& grid, const NotchLimits& limits) {
  c.validate();
  SisoFrf f = SisoFrf::constant(grid, 1.0);
  for (const auto& e : c.elements) {
    if (const auto* n = std::get_if<Notch>(&e)) {
      f.values *= notch_frf(*n, grid);
      continue;
    }
    if (const auto* n = std::get_if<LpvNotch>(&e)) {
      f.values *= notch_frf(evaluate_lpv_notch(*n, require_point(p), limits), grid);
      continue;
    }
    for (std::size_t k = 0; k < grid.size(); ++k)
      f.values(static_cast<Eigen::Index>(k)) *= element_response(e, p, grid.omega(k), limits);
  }
  return f;
}

int integrator_count(const Cascade& c) {
  int n = 0;
  for (const auto& e : c.elements) n += std::holds_alternative<Integrator>(e) ? 1 : 0;
  return n;
}

FilterStep step_lpv_filter(const FilterSpec& spec, const LpvFilterState& state, double u,
                           const SchedulingPoint& p, double dt, const NotchLimits& limits) {
  if (!(dt > 0.0)) throw ConfigError("filter step needs dt > 0");
  const StateSpace ss = realize(spec, p, limits);
  Eigen::VectorXd x = state.x.size() == 0 ? Eigen::VectorXd::Zero(ss.order()) : state.x;
  if (x.size() != ss.order()) throw ConfigError("filter state dimension mismatch");
  FilterStep out;
  out.y = (ss.c * x)(0) + ss.d(0, 0) * u;
  auto f = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return ss.a * z + ss.b.col(0) * u; };
  const Eigen::VectorXd k1 = f(x);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x + dt * k3);
  out.state.x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return out;
}

}  // namespace lpvslc

#include "lpvslc/plant.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "lpvslc/errors.h"

namespace lpvslc {

bool operator==(const SchedulingPoint& a, const SchedulingPoint& b) {
  return a.qx == b.qx && a.qy == b.qy;
}

bool Box::contains(const SchedulingPoint& p, double tol) const {
  const double tx = tol * std::max(1.0, x_max - x_min);
  const double ty = tol * std::max(1.0, y_max - y_min);
  return p.qx >= x_min - tx && p.qx <= x_max + tx && p.qy >= y_min - ty &&
         p.qy <= y_max + ty;
}

SchedulingPoint Box::center() const {
  return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
}

std::vector<SchedulingPoint> Box::grid(int nx, int ny) const {
  if (nx < 1 || ny < 1) throw ConfigError("grid size must be positive");
  auto coord = [](double lo, double hi, int n, int k) {
    if (n == 1) return 0.5 * (lo + hi);
    if (k == n - 1) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::vector<SchedulingPoint> pts;
  pts.reserve(static_cast<std::size_t>(nx * ny));
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j)
      pts.push_back({coord(x_min, x_max, nx, i), coord(y_min, y_max, ny, j)});
  return pts;
}

void Box::validate(const std::string& what) const {
  if (!(x_max > x_min) || !(y_max > y_min) || !std::isfinite(x_min) ||
      !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max))
    throw ConfigError(what + ": box must have x_max > x_min and y_max > y_min");
}

std::string axis_name(RigidAxis axis) {
  switch (axis) {
    case RigidAxis::z: return "z";
    case RigidAxis::rx: return "rx";
    case RigidAxis::ry: return "ry";
  }
  return "?";
}

RigidAxis parse_axis(const std::string& name) {
  if (name == "z") return RigidAxis::z;
  if (name == "rx") return RigidAxis::rx;
  if (name == "ry") return RigidAxis::ry;
  throw ConfigError("unknown rigid axis '" + name + "'");
}

void StateSpace::validate() const {
  const auto n = a.rows();
  if (a.cols() != n || b.rows() != n || c.cols() != n || d.rows() != c.rows() ||
      d.cols() != b.cols())
    throw ConfigError("state-space dimensions inconsistent");
}

Eigen::VectorXd ModalPlantModel::mass_diagonal() const {
  Eigen::VectorXd m(modes());
  int k = 0;
  for (const auto& r : rigid) m(k++) = r.mass;
  for (const auto& f : flexible) m(k++) = f.modal_mass;
  return m;
}

Eigen::VectorXd ModalPlantModel::damping_diagonal() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(modes());
  int k = axes();
  for (const auto& f : flexible) {
    const double w = 2.0 * std::numbers::pi * f.freq_hz;
    d(k++) = 2.0 * f.damping * w * f.modal_mass;
  }
  return d;
}

Eigen::VectorXd ModalPlantModel::stiffness_diagonal() const {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(modes());
  int k = axes();
  for (const auto& f : flexible) {
    const double w = 2.0 * std::numbers::pi * f.freq_hz;
    s(k++) = w * w * f.modal_mass;
  }
  return s;
}

void ModalPlantModel::validate(int rank_grid) const {
  if (rigid.empty()) throw ConfigError("plant needs at least one rigid mode");
  for (const auto& r : rigid)
    if (!(r.mass > 0.0)) throw ConfigError("rigid mode mass must be positive");
  for (std::size_t i = 0; i < rigid.size(); ++i)
    for (std::size_t j = i + 1; j < rigid.size(); ++j)
      if (rigid[i].axis == rigid[j].axis) throw ConfigError("duplicate rigid axis");
  for (const auto& f : flexible) {
    if (!(f.freq_hz > 0.0)) throw ConfigError("flexible mode frequency must be positive");
    if (!(f.damping >= 0.0)) throw ConfigError("modal damping must be non-negative");
    if (!(f.modal_mass > 0.0)) throw ConfigError("modal mass must be positive");
    if (f.kx < 1 || f.ky < 1) throw ConfigError("wave numbers must be >= 1");
  }
  if (actuator_count() < axes())
    throw ConfigError("fewer actuators than controlled axes");
  if (sensor_count() != axes())
    throw ConfigError("number of sensors must equal the number of rigid modes");
  workspace.validate("workspace");
  shape_box.validate("shape box");

  for (const auto& p : workspace.grid(rank_grid, rank_grid)) {
    const auto maps = mode_shape_eval(*this, p);
    Eigen::JacobiSVD<Eigen::MatrixXd> sa(maps.phi_a.topRows(axes()));
    Eigen::JacobiSVD<Eigen::MatrixXd> ss(maps.phi_s.leftCols(axes()));
    const double tol = 1e-10;
    const auto& sva = sa.singularValues();
    const auto& svs = ss.singularValues();
    if (sva(sva.size() - 1) <= tol * sva(0) || svs(svs.size() - 1) <= tol * svs(0)) {
      std::ostringstream os;
      os << "rigid-body actuation/sensing maps lose rank at p = (" << p.qx << ", "
         << p.qy << ")";
      throw ConfigError(os.str());
    }
  }
}

double plate_shape(const FlexibleMode& mode, const Box& box, double x, double y) {
  const double pi = std::numbers::pi;
  return std::sin(mode.kx * pi * (x - box.x_min) / (box.x_max - box.x_min)) *
         std::sin(mode.ky * pi * (y - box.y_min) / (box.y_max - box.y_min));
}

namespace {

void rigid_row(RigidAxis axis, double x, double y, double& out) {
  switch (axis) {
    case RigidAxis::z: out = 1.0; break;
    case RigidAxis::rx: out = y; break;
    case RigidAxis::ry: out = -x; break;
  }
}

}  // namespace

ModeShapeMaps mode_shape_eval(const ModalPlantModel& model, const SchedulingPoint& p) {
  if (!model.workspace.contains(p)) {
    std::ostringstream os;
    os << "scheduling point (" << p.qx << ", " << p.qy << ") outside workspace";
    throw DomainError(os.str());
  }
  const int nq = model.modes();
  const int nr = model.axes();
  const SchedulingPoint c = model.workspace.center();
  const double dx = p.qx - c.qx;
  const double dy = p.qy - c.qy;

  ModeShapeMaps maps;
  maps.phi_a.resize(nq, model.actuator_count());
  maps.phi_s.resize(model.sensor_count(), nq);
  for (int a = 0; a < model.actuator_count(); ++a) {
    const auto& pt = model.actuators[static_cast<std::size_t>(a)];
    for (int r = 0; r < nr; ++r)
      rigid_row(model.rigid[static_cast<std::size_t>(r)].axis, pt.x, pt.y, maps.phi_a(r, a));
    const double x = pt.x + model.actuator_shift * dx;
    const double y = pt.y + model.actuator_shift * dy;
    for (std::size_t k = 0; k < model.flexible.size(); ++k)
      maps.phi_a(nr + static_cast<int>(k), a) =
          plate_shape(model.flexible[k], model.shape_box, x, y);
  }
  for (int s = 0; s < model.sensor_count(); ++s) {
    const auto& pt = model.sensors[static_cast<std::size_t>(s)];
    for (int r = 0; r < nr; ++r)
      rigid_row(model.rigid[static_cast<std::size_t>(r)].axis, pt.x, pt.y, maps.phi_s(s, r));
    const double x = pt.x + model.sensor_shift * dx;
    const double y = pt.y + model.sensor_shift * dy;
    for (std::size_t k = 0; k < model.flexible.size(); ++k)
      maps.phi_s(s, nr + static_cast<int>(k)) =
          plate_shape(model.flexible[k], model.shape_box, x, y);
  }
  return maps;
}

StateSpace frozen_realization(const ModalPlantModel& model, const SchedulingPoint& p) {
  const auto maps = mode_shape_eval(model, p);
  const int nq = model.modes();
  const Eigen::VectorXd m = model.mass_diagonal();
  if ((m.array() <= 0.0).any()) throw ConfigError("singular mass matrix");
  const Eigen::VectorXd minv = m.cwiseInverse();

  StateSpace ss;
  ss.a = Eigen::MatrixXd::Zero(2 * nq, 2 * nq);
  ss.a.topRightCorner(nq, nq).setIdentity();
  ss.a.bottomLeftCorner(nq, nq) = (-minv.cwiseProduct(model.stiffness_diagonal())).asDiagonal();
  ss.a.bottomRightCorner(nq, nq) = (-minv.cwiseProduct(model.damping_diagonal())).asDiagonal();
  ss.b = Eigen::MatrixXd::Zero(2 * nq, model.actuator_count());
  ss.b.bottomRows(nq) = minv.asDiagonal() * maps.phi_a;
  ss.c = Eigen::MatrixXd::Zero(model.sensor_count(), 2 * nq);
  ss.c.leftCols(nq) = maps.phi_s;
  ss.d = Eigen::MatrixXd::Zero(model.sensor_count(), model.actuator_count());
  return ss;
}

ModalPlantModel rigid_benchmark_plant() {
  ModalPlantModel m;
  m.rigid = {{RigidAxis::z, 10.0}, {RigidAxis::rx, 0.1}, {RigidAxis::ry, 0.1}};
  const double a = 0.08;
  m.actuators = {{-a, -a}, {a, -a}, {a, a}, {-a, a}};
  m.sensors = {{-a, -a}, {a, -a}, {0.0, a}};
  m.shape_box = {-0.165, 0.335, -0.25, 0.25};
  m.workspace = {0.0, 0.2, 0.0, 0.2};
  return m;
}

ModalPlantModel benchmark_plant() {
  ModalPlantModel m = rigid_benchmark_plant();
  m.flexible = {{226.5, 0.02, 2, 1, 1.0}, {480.0, 0.02, 1, 3, 1.0}, {710.0, 0.02, 2, 3, 1.0}};
  return m;
}

}  // namespace lpvslc

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lpvslc {

struct SchedulingPoint {
  double qx = 0.0;
  double qy = 0.0;
};

bool operator==(const SchedulingPoint& a, const SchedulingPoint& b);

struct Box {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(const SchedulingPoint& p, double tol = 1e-12) const;
  SchedulingPoint center() const;
  // Uniform nx-by-ny grid including the edges, x outer and y inner.
  std::vector<SchedulingPoint> grid(int nx, int ny) const;
  void validate(const std::string& what) const;
};

using Workspace = Box;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class RigidAxis { z, rx, ry };

std::string axis_name(RigidAxis axis);
RigidAxis parse_axis(const std::string& name);

struct RigidMode {
  RigidAxis axis = RigidAxis::z;
  double mass = 1.0;  // kg, or kg m^2 for rotations
};

struct FlexibleMode {
  double freq_hz = 0.0;
  double damping = 0.0;
  int kx = 1;
  int ky = 1;
  double modal_mass = 1.0;
};

// Continuous-time realization x' = a x + b u, y = c x + d u.
struct StateSpace {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  Eigen::MatrixXd c;
  Eigen::MatrixXd d;

  int order() const { return static_cast<int>(a.rows()); }
  int inputs() const { return static_cast<int>(b.cols()); }
  int outputs() const { return static_cast<int>(c.rows()); }
  void validate() const;
};

// Second-order modal model M q'' + D q' + K q = Phi_a(p) u, y = Phi_s(p) q.
// Modes are ordered rigid first, then flexible. Flexible shapes are plate
// modes on shape_box, sampled at actuators shifted by actuator_shift*(p-c)
// and at sensors shifted by sensor_shift*(p-c), c the workspace center.
struct ModalPlantModel {
  std::vector<RigidMode> rigid;
  std::vector<FlexibleMode> flexible;
  std::vector<Point2> actuators;
  std::vector<Point2> sensors;
  Box shape_box;
  Workspace workspace;
  double actuator_shift = 1.0;
  double sensor_shift = -1.0;

  int modes() const { return static_cast<int>(rigid.size() + flexible.size()); }
  int axes() const { return static_cast<int>(rigid.size()); }
  int actuator_count() const { return static_cast<int>(actuators.size()); }
  int sensor_count() const { return static_cast<int>(sensors.size()); }

  Eigen::VectorXd mass_diagonal() const;
  Eigen::VectorXd damping_diagonal() const;
  Eigen::VectorXd stiffness_diagonal() const;

  // Throws ConfigError; rank conditions are checked on a grid of
  // rank_grid x rank_grid workspace points.
  void validate(int rank_grid = 5) const;
};

struct ModeShapeMaps {
  Eigen::MatrixXd phi_a;  // modes x actuators
  Eigen::MatrixXd phi_s;  // sensors x modes
};

double plate_shape(const FlexibleMode& mode, const Box& box, double x, double y);

ModeShapeMaps mode_shape_eval(const ModalPlantModel& model, const SchedulingPoint& p);

// Raw frozen realization: inputs are actuator forces, outputs sensor readings.
StateSpace frozen_realization(const ModalPlantModel& model, const SchedulingPoint& p);

// Surrogate planar-stage plant with z, Rx, Ry rigid modes and three plate
// modes at 226.5, 480 and 710 Hz.
ModalPlantModel benchmark_plant();

// Same layout with the flexible modes removed.
ModalPlantModel rigid_benchmark_plant();

}  // namespace lpvslc

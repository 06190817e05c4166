#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace lpvslc {

struct MotionBounds {
  double v_max = 1.0;
  double a_max = 1.0;
  double j_max = 1.0;
  double s_max = 1.0;

  void validate() const;
};

struct MotionState {
  double pos = 0.0;
  double vel = 0.0;
  double acc = 0.0;
  double jerk = 0.0;
  double snap = 0.0;
};

struct SnapSegment {
  double duration = 0.0;
  double snap = 0.0;
};

// Piecewise-constant snap profile. Segment start states are obtained by
// exact polynomial integration from the initial state.
struct TrajectoryProfile {
  std::vector<SnapSegment> segments;
  MotionState initial;
  double sample_rate = 0.0;  // Hz; 0 when durations were not quantized
  double distance = 0.0;     // commanded displacement

  // Phase durations of the symmetric construction (after quantization).
  double t_snap = 0.0;
  double t_jerk = 0.0;
  double t_acc = 0.0;
  double t_vel = 0.0;

  double duration() const;
  double displacement() const;
};

// Time-optimal symmetric snap-bang profile from rest to rest over
// `displacement`. With sample_rate > 0 the phase durations are rounded up to
// the sample period and the snap level rescaled to land exactly on target.
TrajectoryProfile plan(double displacement, const MotionBounds& bounds, double sample_rate = 0.0);

MotionState sample(const TrajectoryProfile& profile, double t);

// u_ff(t) = M_rb acc(t) per axis for accelerations acc (rows: samples).
Eigen::MatrixXd mass_feedforward(const Eigen::MatrixXd& acc, const Eigen::MatrixXd& rigid_mass);
std::vector<double> mass_feedforward(const TrajectoryProfile& profile, double mass,
                                     const std::vector<double>& times);

void write_profile_csv(std::ostream& os, const TrajectoryProfile& profile, double sample_rate);

}  // namespace lpvslc

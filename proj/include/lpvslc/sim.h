#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpvslc/design.h"
#include "lpvslc/plant.h"
#include "lpvslc/trajectory.h"

namespace lpvslc {

enum class SchedulingSource { reference, measured_delayed };

struct SimConfig {
  double sample_rate = 10000.0;
  double duration = 2.0;
  SchedulingSource scheduling = SchedulingSource::reference;
  double window = 0.005;    // MA/MSD exposure window T
  double settling = 0.02;   // settling zone after each acceleration phase
  double divergence_limit = 1e6;
  bool feedback = true;
  bool feedforward = true;
  std::string metric_axis = "z";  // axis reported in comparison summaries

  double dt() const { return 1.0 / sample_rate; }
  void validate(const ModalPlantModel& model) const;
};

// Planar move from `start` to `end` along a straight line, with every
// controlled axis following a scaled copy of the same profile.
struct ReferenceSpec {
  SchedulingPoint start;
  SchedulingPoint end;
  MotionBounds bounds;
  std::vector<double> axis_displacement;  // one per controlled axis
  double delay = 0.0;                     // rest before the move starts
};

struct ReferenceSample {
  SchedulingPoint p;
  Eigen::VectorXd pos;
  Eigen::VectorXd acc;
};

struct Interval {
  std::string kind;  // "acceleration", "settling" or "constant_velocity"
  double t0 = 0.0;
  double t1 = 0.0;
};

class Reference {
 public:
  Reference(const ReferenceSpec& spec, double sample_rate);

  ReferenceSample at(double t) const;
  const TrajectoryProfile& profile() const { return profile_; }
  const ReferenceSpec& spec() const { return spec_; }
  double end_time() const { return spec_.delay + profile_.duration(); }
  std::vector<Interval> intervals(double settling) const;

 private:
  ReferenceSpec spec_;
  TrajectoryProfile profile_;
  double scale_ = 0.0;  // path length (or unit) the profile was planned for
  Eigen::Vector2d dir_ = Eigen::Vector2d::Zero();
};

struct SimResult {
  std::vector<std::string> axes;
  std::vector<double> t;
  Eigen::MatrixXd r;  // samples x axes
  Eigen::MatrixXd y;
  Eigen::MatrixXd e;
  Eigen::MatrixXd u;  // decoupled control effort, feedforward included
  std::vector<SchedulingPoint> p;
  std::vector<double> state_norm;
  Eigen::MatrixXd ma;   // NaN where the window does not fit
  Eigen::MatrixXd msd;
  std::vector<Interval> intervals;
  double window = 0.0;
};

// Fixed-step RK4 of plant and controller states with p frozen over each step.
SimResult simulate(const ModalPlantModel& model, const ControllerSet& controllers,
                   const Reference& reference, const SimConfig& config,
                   const std::optional<Eigen::VectorXd>& initial_state = std::nullopt);

struct MaMsd {
  std::vector<double> ma;
  std::vector<double> msd;
};

// Centered moving average / standard deviation over windows of length T
// (an even number of samples dt), trapezoid rule; NaN where the window
// does not fit.
MaMsd ma_msd(const std::vector<double>& e, double dt, double window);

struct IntervalMetrics {
  double mean_abs_ma = 0.0;
  double mean_msd = 0.0;
  std::size_t samples = 0;
};

IntervalMetrics interval_metrics(const SimResult& result, int axis, const Interval& interval);

double relative_reduction_pct(double reference, double improved);

// 0.1 m move along x at y = 0.1 m with a 1 mm z move following the same profile.
ReferenceSpec benchmark_reference();

}  // namespace lpvslc

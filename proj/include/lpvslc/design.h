#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lpvslc/filters.h"
#include "lpvslc/freqresp.h"
#include "lpvslc/plant.h"
#include "lpvslc/scheduling.h"

namespace lpvslc {

struct Decoupling {
  Eigen::MatrixXd tu;  // actuators x axes
  Eigen::MatrixXd ty;  // axes x sensors
};

Decoupling rigid_body_decouple(const ModalPlantModel& model, const SchedulingPoint& p);

// Frozen plant seen by the decoupled loops: u_axes -> y_axes.
StateSpace decoupled_realization(const ModalPlantModel& model, const SchedulingPoint& p,
                                 const Decoupling& dec);

struct LoopSpec {
  std::string name;
  double bandwidth_cap_hz = 100.0;
  double bandwidth_min_hz = 5.0;
  bool scheduled = false;
};

// Discrete family searched per notch slot: f1 at the slot resonance,
// f2 = skew * f1, beta1 = ratio * beta2.
struct NotchSearch {
  std::vector<double> skews{1.0, 1.1, 1.2, 1.3, 1.45, 1.6, 1.8};
  std::vector<double> beta2{0.1, 0.2, 0.35, 0.5, 0.7, 1.0};
  std::vector<double> beta1_ratio{0.0, 0.05, 0.15, 0.3, 0.5, 0.75, 1.0};
  double peak_threshold = 2.0;
  double rigid_line_max_hz = 10.0;
  double cluster_tolerance = 0.1;
  int max_notches = 3;
  int sweeps = 2;
};

struct DesignSpec {
  std::vector<LoopSpec> loops;  // one per rigid axis, in plant axis order
  std::vector<int> loop_order;  // closing order (indices into loops)
  double sensitivity_bound_db = 6.0;
  double alpha = 3.0;
  double integrator_ratio = 5.0;  // integrator zero at f_bw / ratio
  int design_nx = 3;
  int design_ny = 3;
  int verify_nx = 5;
  int verify_ny = 5;
  FrequencyGrid grid = FrequencyGrid::default_grid();
  int surface_order_i = 3;
  int surface_order_j = 3;
  double fit_tolerance = 1e-6;  // max |residual| relative to the value scale
  int bisection_iterations = 20;
  NotchSearch notch;
  int jobs = 1;

  void validate(int axes) const;
};

struct ControllerSet {
  std::string kind;  // "lti" or "lpv"
  std::vector<std::string> names;
  std::vector<Cascade> loops;
  std::vector<double> bandwidth_hz;
  Decoupling dec;

  bool scheduled() const;
  std::vector<StateSpace> realize_at(const SchedulingPoint& p, const NotchLimits& limits = {}) const;
  std::vector<SisoFrf> frf_at(const SchedulingPoint& p, const FrequencyGrid& grid) const;
};

struct FrozenPlant {
  SchedulingPoint p;
  FrfMatrix frf;                  // decoupled
  std::optional<StateSpace> ss;   // decoupled, when a parametric model exists
};

std::vector<FrozenPlant> sample_plant(const ModalPlantModel& model, const Decoupling& dec,
                                      const std::vector<SchedulingPoint>& points,
                                      const FrequencyGrid& grid, int jobs = 1);

Gain tune_gain(const SisoFrf& g, const Cascade& partial, double f_bw);

// Rigid-body mass estimated from the low-frequency part of g (median of
// 1/(w^2 |g|) below max_hz).
double rigid_line_mass(const SisoFrf& g, double max_hz);

struct PointVerdict {
  SchedulingPoint p;
  std::vector<int> encirclements;
  std::vector<double> sensitivity_peak_db;
  std::vector<double> crossover_hz;
  std::vector<double> phase_margin_deg;
  double det_residual = 0.0;
  std::optional<double> eigen_max_real;
  bool nyquist_stable = false;
  bool sensitivity_ok = false;
  bool passed = false;
  std::string failure;
};

struct CertificationReport {
  double bound_db = 6.0;
  std::vector<PointVerdict> points;
  bool passed = false;
  bool oracle_agrees = true;
};

// Frozen-position certification of the scheduled loop at every point:
// Nyquist winding of the determinant factors, per-loop sensitivity peaks
// (all other loops closed), determinant-identity residual, and the
// closed-loop eigenvalue oracle when a realization is available.
CertificationReport certify(const std::vector<FrozenPlant>& plants, const ControllerSet& controllers,
                            const DesignSpec& spec, bool use_oracle = true);

struct ResonanceSlot {
  double freq_hz = 0.0;                // cluster median
  std::vector<double> local_freq_hz;   // per design point
  std::vector<bool> local_peak;        // whether a local peak was found
};

std::vector<ResonanceSlot> find_resonance_slots(const std::vector<SisoFrf>& g, double mass,
                                                const NotchSearch& search);

struct ScheduledNotchDesign {
  int loop = 0;
  int slot = 0;
  FrozenDesignSet beta1, beta2, f1, f2;
};

struct LoopDesignInfo {
  std::string name;
  double bandwidth_hz = 0.0;
  double rigid_mass = 0.0;
  std::vector<double> slot_freq_hz;
  std::string limit;  // "cap" or what bounded the bisection
};

struct DesignResult {
  ControllerSet controllers;
  std::vector<LoopDesignInfo> loops;
  std::vector<ScheduledNotchDesign> local_designs;
  CertificationReport certification;
};

DesignResult design_lti_slc(const ModalPlantModel& model, const DesignSpec& spec);
DesignResult design_lpv_slc(const ModalPlantModel& model, const DesignSpec& spec);

// Fits the scheduled notch surfaces of `loop`/`slot` from frozen designs.
LpvNotch fit_lpv_notch(const ScheduledNotchDesign& d, int order_i, int order_j,
                       const Normalization& norm, double tolerance);

DesignSpec benchmark_design_spec();

}  // namespace lpvslc

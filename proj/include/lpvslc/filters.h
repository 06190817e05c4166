#pragma once

#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "lpvslc/freqresp.h"
#include "lpvslc/plant.h"
#include "lpvslc/scheduling.h"

namespace lpvslc {

struct Gain {
  double k = 1.0;
};

// Pure integrator 1/s, or with zero_hz set the PI form (s + 2 pi zero_hz)/s.
struct Integrator {
  std::optional<double> zero_hz;
};

struct Lead {
  double f_bw = 1.0;
  double alpha = 3.0;
};

struct Notch {
  double f1 = 1.0;
  double f2 = 1.0;
  double beta1 = 0.0;
  double beta2 = 1.0;
};

struct LpvNotch {
  CoefficientSurface beta1;
  CoefficientSurface beta2;
  CoefficientSurface f1;
  CoefficientSurface f2;
};

using FilterSpec = std::variant<Gain, Integrator, Lead, Notch, LpvNotch>;

bool is_lpv(const FilterSpec& spec);
void validate(const FilterSpec& spec);

// Ordered filter chain; elements [0, split) form the LTI part Gamma and
// [split, end) the scheduled part Psi.
struct Cascade {
  std::vector<FilterSpec> elements;
  std::size_t split = 0;

  static Cascade lti(std::vector<FilterSpec> gamma);
  static Cascade partitioned(std::vector<FilterSpec> gamma, std::vector<FilterSpec> psi);
  bool scheduled() const { return split < elements.size(); }
  void validate() const;
};

// Frequency bounds applied to scheduled notch frequencies.
struct NotchLimits {
  double f_min = 1.0;
  double f_max = std::numeric_limits<double>::infinity();

  static NotchLimits for_step(double dt) { return {1.0, 0.45 / dt}; }
};

cdouble notch_transfer(double f1, double f2, double beta1, double beta2, double omega);
cdouble element_response(const FilterSpec& spec, const std::optional<SchedulingPoint>& p,
                         double omega, const NotchLimits& limits = {});

Notch evaluate_lpv_notch(const LpvNotch& spec, const SchedulingPoint& p,
                         const NotchLimits& limits = {});

StateSpace realize(const FilterSpec& spec, const std::optional<SchedulingPoint>& p = std::nullopt,
                   const NotchLimits& limits = {});

// Series connection: `second` driven by the output of `first`.
StateSpace series(const StateSpace& first, const StateSpace& second);
StateSpace realize(const Cascade& c, const std::optional<SchedulingPoint>& p = std::nullopt,
                   const NotchLimits& limits = {});

SisoFrf cascade_frf(const Cascade& c, const std::optional<SchedulingPoint>& p,
                    const FrequencyGrid& grid, const NotchLimits& limits = {});
Eigen::ArrayXcd notch_frf(const Notch& n, const FrequencyGrid& grid);

int integrator_count(const Cascade& c);

struct LpvFilterState {
  Eigen::VectorXd x;
};

struct FilterStep {
  LpvFilterState state;
  double y = 0.0;
};

// One RK4 step of a single filter with its coefficients frozen at p over the
// step and the input held at u; y is the output at the start of the step.
FilterStep step_lpv_filter(const FilterSpec& spec, const LpvFilterState& state, double u,
                           const SchedulingPoint& p, double dt,
                           const NotchLimits& limits = {});

}  // namespace lpvslc

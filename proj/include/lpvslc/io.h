#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "lpvslc/design.h"
#include "lpvslc/plant.h"
#include "lpvslc/sim.h"

namespace lpvslc {

using json = nlohmann::json;

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

ModalPlantModel plant_from_json(const json& j);
json to_json(const ModalPlantModel& model);

FrequencyGrid grid_from_json(const json& j);
json to_json(const FrequencyGrid& grid);

DesignSpec design_spec_from_json(const json& j);
json to_json(const DesignSpec& spec);

CoefficientSurface surface_from_json(const json& j);
json to_json(const CoefficientSurface& s);

FilterSpec filter_from_json(const json& j);
json to_json(const FilterSpec& f);

ControllerSet controllers_from_json(const json& j);
json to_json(const ControllerSet& c);

json to_json(const CertificationReport& r);
json to_json(const DesignResult& r);
json to_json(const StateSpace& ss);

ReferenceSpec reference_from_json(const json& j);
json to_json(const ReferenceSpec& r);

SimConfig sim_config_from_json(const json& j);
json to_json(const SimConfig& c);

FrozenDesignSet design_set_from_json(const json& j);
json to_json(const FrozenDesignSet& d);

// Paths resolved relative to the directory of the project file.
struct ProjectConfig {
  std::filesystem::path plant;
  std::filesystem::path design;
  std::filesystem::path trajectory;
  std::filesystem::path sim;
  std::filesystem::path out = "out";

  static ProjectConfig load(const std::filesystem::path& path);
};

// One row per sample: t, px, py and r/y/e/u/ma/msd per axis.
void write_sim_csv(std::ostream& os, const SimResult& r);

struct RunSummary {
  std::string name;
  IntervalMetrics metrics;
};

// Comparison table over the constant-velocity interval of `axis`; the first
// run is the reference for the relative reductions.
json comparison_summary(const std::vector<RunSummary>& runs, const std::string& axis,
                        const Interval& interval, const SimConfig& config);

// Constant-velocity interval of a simulation (throws if the profile has none).
Interval constant_velocity_interval(const SimResult& r);
int axis_index(const SimResult& r, const std::string& axis);

}  // namespace lpvslc

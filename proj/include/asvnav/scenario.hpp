#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "asvnav/flow.hpp"
#include "asvnav/ocp.hpp"
#include "asvnav/safety.hpp"
#include "asvnav/vessel.hpp"

namespace asv {

enum class ControllerVariant { rmpc_cbf, mpc_nominal, rmpc_hard_border };

const char* to_string(ControllerVariant v);
std::optional<ControllerVariant> variant_from_string(const std::string& s);

// A complete closed-loop experiment: geometry, task, tuning, vessel.
// Borders are stored normalized with the start position strictly on the
// safe side (lines are flipped during load if given the other way round).
struct ScenarioConfig {
  std::string name;
  State start;
  Vec6 goal = Vec6::Zero();  // [x, y, psi, 0, 0, 0]
  int horizon = 10;
  double ts = 0.2;
  int step_cap = 600;
  double arrival_tolerance = 0.3;
  ControllerVariant controller = ControllerVariant::rmpc_cbf;
  double flow_scale = 1.0;
  Weights weights;
  Vec3 u_min = Vec3::Constant(-8.0);
  Vec3 u_max = Vec3::Constant(8.0);
  DisturbanceBounds disturbance;
  CbfParams cbf;
  std::optional<double> cbf_margin;  // empty = derive from model data
  std::vector<Obstacle> obstacles;
  std::vector<BorderLine> borders;
  VesselParams vessel;
  std::string vessel_params_path;
  DisturbanceInjection injection = DisturbanceInjection::direct;

  // FNV-1a over a canonical serialization of every semantically relevant
  // field except the controller variant and the name, so runs of different
  // controllers on the same scenario share a hash.
  std::uint64_t hash() const;
};

// Loads and validates a scenario JSON file. vessel_params paths are resolved
// relative to the scenario file's directory. Throws ScenarioError with the
// offending key/index in the message.
ScenarioConfig load_scenario(const std::string& path);

// Full validity check (also called by load_scenario): geometry is
// well-formed and both endpoints are strictly safe w.r.t. every obstacle
// and border.
void validate_scenario(const ScenarioConfig& cfg);

}  // namespace asv

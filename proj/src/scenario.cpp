#include "asvnav/scenario.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace asv {

namespace {

using nlohmann::json;

void append_num(std::string& s, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g;", v);
  s += buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double get_num(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ScenarioError("scenario: missing key '" + key + "'");
  if (!j[key].is_number()) throw ScenarioError("scenario: key '" + key + "' must be a number");
  return j[key].get<double>();
}

Vec3 get_vec3(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
    throw ScenarioError("scenario: key '" + key + "' must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) v[i] = j[key][i].get<double>();
  return v;
}

Vec6 get_vec6(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 6) {
    throw ScenarioError("scenario: key '" + key + "' must be an array of 6 numbers");
  }
  Vec6 v;
  for (int i = 0; i < 6; ++i) v[i] = j[key][i].get<double>();
  return v;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ScenarioError("scenario: unknown key '" + item.key() + "' in " + where);
    }
  }
}

}  // namespace

const char* to_string(ControllerVariant v) {
  switch (v) {
    case ControllerVariant::rmpc_cbf: return "rmpc_cbf";
    case ControllerVariant::mpc_nominal: return "mpc_nominal";
    case ControllerVariant::rmpc_hard_border: return "rmpc_hard_border";
  }
  return "unknown";
}

std::optional<ControllerVariant> variant_from_string(const std::string& s) {
  if (s == "rmpc_cbf") return ControllerVariant::rmpc_cbf;
  if (s == "mpc_nominal") return ControllerVariant::mpc_nominal;
  if (s == "rmpc_hard_border") return ControllerVariant::rmpc_hard_border;
  return std::nullopt;
}

std::uint64_t ScenarioConfig::hash() const {
  std::string s;
  s.reserve(1024);
  const Vec6 sf = start.flat();
  for (int i = 0; i < 6; ++i) append_num(s, sf[i]);
  for (int i = 0; i < 6; ++i) append_num(s, goal[i]);
  append_num(s, horizon);
  append_num(s, ts);
  append_num(s, step_cap);
  append_num(s, arrival_tolerance);
  append_num(s, flow_scale);
  for (int i = 0; i < 6; ++i) append_num(s, weights.q[i]);
  for (int i = 0; i < 6; ++i) append_num(s, weights.q_terminal[i]);
  for (int i = 0; i < 3; ++i) append_num(s, weights.r[i]);
  for (int i = 0; i < 3; ++i) append_num(s, u_min[i]);
  for (int i = 0; i < 3; ++i) append_num(s, u_max[i]);
  append_num(s, disturbance.w_min);
  append_num(s, disturbance.w_max);
  append_num(s, disturbance.n_levels);
  append_num(s, cbf.gamma_o);
  append_num(s, cbf.gamma_b);
  s += cbf_margin ? "margin;" : "auto;";
  if (cbf_margin) append_num(s, *cbf_margin);
  for (const auto& o : obstacles) {
    append_num(s, o.x);
    append_num(s, o.y);
    append_num(s, o.radius);
  }
  for (const auto& b : borders) {
    append_num(s, b.a);
    append_num(s, b.b);
    append_num(s, b.c);
  }
  // vessel parameters by value, so the hash is path-independent
  char vb[64];
  std::snprintf(vb, sizeof(vb), "v:%.17g,%.17g,%.17g,%.17g,%.17g;", vessel.m, vessel.I_z,
                vessel.x_g, vessel.r_a, vessel.half_diagonal());
  s += vb;
  append_num(s, vessel.X_du);
  append_num(s, vessel.Y_dv);
  append_num(s, vessel.Y_dr);
  append_num(s, vessel.N_dv);
  append_num(s, vessel.N_dr);
  append_num(s, vessel.X_u + vessel.Y_v + vessel.N_r);
  append_num(s, vessel.X_absu_u + vessel.Y_absv_v + vessel.N_absv_v);
  append_num(s, vessel.X_uuu + vessel.Y_r + vessel.N_v);
  append_num(s, vessel.l_x);
  append_num(s, vessel.l_y);
  s += injection == DisturbanceInjection::direct ? "direct" : "thruster_map";
  return fnv1a(s);
}

void validate_scenario(const ScenarioConfig& cfg) {
  if (cfg.horizon < 1) throw ScenarioError("scenario: horizon must be >= 1");
  if (!(cfg.ts > 0.0)) throw ScenarioError("scenario: ts must be positive");
  if (cfg.step_cap < 1) throw ScenarioError("scenario: step_cap must be >= 1");
  if (!(cfg.arrival_tolerance > 0.0)) {
    throw ScenarioError("scenario: arrival_tolerance must be positive");
  }
  if (cfg.flow_scale < 0.0) throw ScenarioError("scenario: flow_scale must be nonnegative");
  for (int i = 0; i < 3; ++i) {
    if (!(cfg.u_min[i] < cfg.u_max[i])) {
      throw ScenarioError("scenario: input bounds must satisfy min < max componentwise");
    }
  }
  if (!(cfg.cbf.gamma_o > 0.0) || cfg.cbf.gamma_o > 1.0 || !(cfg.cbf.gamma_b > 0.0) ||
      cfg.cbf.gamma_b > 1.0) {
    throw ScenarioError("scenario: barrier decay rates must lie in (0, 1]");
  }
  if (cfg.cbf_margin && *cfg.cbf_margin < 0.0) {
    throw ScenarioError("scenario: cbf margin must be nonnegative");
  }
  if (cfg.disturbance.n_levels < 2) {
    throw ScenarioError("scenario: disturbance n_levels must be >= 2");
  }
  if (!(cfg.disturbance.w_min < cfg.disturbance.w_max)) {
    throw ScenarioError("scenario: disturbance bounds must satisfy w_min < w_max");
  }
  cfg.vessel.validate();

  for (std::size_t i = 0; i < cfg.obstacles.size(); ++i) {
    if (!(cfg.obstacles[i].radius > 0.0)) {
      throw ScenarioError("scenario: obstacle " + std::to_string(i) +
                          " must have a positive radius");
    }
  }
  for (std::size_t i = 0; i < cfg.borders.size(); ++i) {
    if (std::hypot(cfg.borders[i].a, cfg.borders[i].b) < 1e-12) {
      throw ScenarioError("scenario: border " + std::to_string(i) +
                          " has a degenerate normal vector");
    }
  }

  const auto check_point = [&](const Eigen::Vector2d& p, const char* which) {
    for (std::size_t i = 0; i < cfg.obstacles.size(); ++i) {
      const double h = obstacle_h(p, cfg.obstacles[i], cfg.vessel.r_a);
      if (h <= 0.0) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "scenario: %s position lies inside inflated obstacle %zu (h = %.6g)", which,
                      i, h);
        throw ScenarioError(buf);
      }
    }
    for (std::size_t i = 0; i < cfg.borders.size(); ++i) {
      const double h = border_h(p, cfg.borders[i], cfg.vessel);
      if (h <= 0.0) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "scenario: %s position violates border %zu clearance (h = %.6g)", which, i,
                      h);
        throw ScenarioError(buf);
      }
    }
  };
  check_point({cfg.start.eta.x, cfg.start.eta.y}, "start");
  check_point({cfg.goal[0], cfg.goal[1]}, "goal");
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ScenarioError("scenario: " + path + " is not valid JSON: " + e.what());
  }

  reject_unknown(j, {"name", "start", "start_velocity", "goal", "horizon", "ts", "step_cap",
                     "arrival_tolerance", "controller", "flow_scale", "weights", "input_bounds",
                     "disturbance", "cbf", "obstacles", "borders", "vessel_params", "injection"},
                 "the top level");

  ScenarioConfig cfg;
  cfg.name = j.value("name", std::string("unnamed"));

  const Vec3 start = get_vec3(j, "start");
  cfg.start.eta = {start[0], start[1], start[2]};
  if (j.contains("start_velocity")) {
    const Vec3 sv = get_vec3(j, "start_velocity");
    cfg.start.nu = {sv[0], sv[1], sv[2]};
  }
  const Vec3 goal = get_vec3(j, "goal");
  cfg.goal << goal[0], goal[1], goal[2], 0.0, 0.0, 0.0;

  cfg.horizon = static_cast<int>(get_num(j, "horizon"));
  cfg.ts = get_num(j, "ts");
  if (j.contains("step_cap")) cfg.step_cap = static_cast<int>(get_num(j, "step_cap"));
  if (j.contains("arrival_tolerance")) cfg.arrival_tolerance = get_num(j, "arrival_tolerance");
  if (j.contains("flow_scale")) cfg.flow_scale = get_num(j, "flow_scale");

  if (j.contains("controller")) {
    const auto v = variant_from_string(j["controller"].get<std::string>());
    if (!v) {
      throw ScenarioError("scenario: unknown controller '" +
                          j["controller"].get<std::string>() + "'");
    }
    cfg.controller = *v;
  }

  if (j.contains("weights")) {
    const json& w = j["weights"];
    reject_unknown(w, {"q", "q_terminal", "r"}, "weights");
    if (w.contains("q")) cfg.weights.q = get_vec6(w, "q");
    if (w.contains("q_terminal")) cfg.weights.q_terminal = get_vec6(w, "q_terminal");
    if (w.contains("r")) cfg.weights.r = get_vec3(w, "r");
  }
  if (j.contains("input_bounds")) {
    const json& b = j["input_bounds"];
    reject_unknown(b, {"min", "max"}, "input_bounds");
    cfg.u_min = get_vec3(b, "min");
    cfg.u_max = get_vec3(b, "max");
  }
  if (j.contains("disturbance")) {
    const json& d = j["disturbance"];
    reject_unknown(d, {"w_min", "w_max", "n_levels"}, "disturbance");
    cfg.disturbance.w_min = get_num(d, "w_min");
    cfg.disturbance.w_max = get_num(d, "w_max");
    cfg.disturbance.n_levels = static_cast<int>(get_num(d, "n_levels"));
  }
  if (j.contains("cbf")) {
    const json& c = j["cbf"];
    reject_unknown(c, {"gamma_o", "gamma_b", "margin"}, "cbf");
    if (c.contains("gamma_o")) cfg.cbf.gamma_o = get_num(c, "gamma_o");
    if (c.contains("gamma_b")) cfg.cbf.gamma_b = get_num(c, "gamma_b");
    if (c.contains("margin")) {
      if (c["margin"].is_string()) {
        if (c["margin"].get<std::string>() != "auto") {
          throw ScenarioError("scenario: cbf margin must be a number or \"auto\"");
        }
      } else {
        cfg.cbf_margin = get_num(c, "margin");
      }
    }
  }

  if (j.contains("obstacles")) {
    if (!j["obstacles"].is_array()) throw ScenarioError("scenario: obstacles must be an array");
    for (std::size_t i = 0; i < j["obstacles"].size(); ++i) {
      const json& o = j["obstacles"][i];
      reject_unknown(o, {"x", "y", "radius"}, "obstacle " + std::to_string(i));
      cfg.obstacles.push_back({get_num(o, "x"), get_num(o, "y"), get_num(o, "radius")});
    }
  }
  if (j.contains("borders")) {
    if (!j["borders"].is_array()) throw ScenarioError("scenario: borders must be an array");
    for (std::size_t i = 0; i < j["borders"].size(); ++i) {
      const json& b = j["borders"][i];
      reject_unknown(b, {"a", "b", "c"}, "border " + std::to_string(i));
      BorderLine line{get_num(b, "a"), get_num(b, "b"), get_num(b, "c")};
      if (std::hypot(line.a, line.b) < 1e-12) {
        throw ScenarioError("scenario: border " + std::to_string(i) +
                            " has a degenerate normal vector");
      }
      line = line.normalized();
      const double d = line.a * cfg.start.eta.x + line.b * cfg.start.eta.y + line.c;
      if (std::abs(d) <= 1e-9) {
        throw ScenarioError("scenario: start position lies on border " + std::to_string(i));
      }
      if (d < 0.0) {  // orient the safe side toward the start position
        line = {-line.a, -line.b, -line.c};
      }
      cfg.borders.push_back(line);
    }
  }

  if (!j.contains("vessel_params") || !j["vessel_params"].is_string()) {
    throw ScenarioError("scenario: missing key 'vessel_params' (path to a parameter file)");
  }
  cfg.vessel_params_path = j["vessel_params"].get<std::string>();
  std::filesystem::path vp(cfg.vessel_params_path);
  if (vp.is_relative()) vp = std::filesystem::path(path).parent_path() / vp;
  cfg.vessel = load_vessel_params(vp.string());

  if (j.contains("injection")) {
    const std::string inj = j["injection"].get<std::string>();
    if (inj == "direct") {
      cfg.injection = DisturbanceInjection::direct;
    } else if (inj == "thruster_map") {
      cfg.injection = DisturbanceInjection::thruster_map;
    } else {
      throw ScenarioError("scenario: injection must be 'direct' or 'thruster_map'");
    }
  }

  validate_scenario(cfg);
  return cfg;
}

}  // namespace asv

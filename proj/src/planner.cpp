#include "asvnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>

#include "asvnav/logging.hpp"

namespace asv {

namespace {

constexpr int kMaxOuterIterations = 5;
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double obstacle_gradient_bound(const ScenarioConfig& cfg) {
  // |grad h_o| = 2*dist/(r+r_a)^2, i.e. 2*sqrt(h+1)/(r+r_a). Decay rows can
  // only be active while gamma*h stays below the per-step barrier change the
  // vessel can produce, which keeps the active band under h ~ 5 for this
  // hull; a factor 3 on the h <= 1 bound covers it with headroom.
  double worst = 0.0;
  for (const auto& o : cfg.obstacles) {
    worst = std::max(worst, 3.0 * 2.0 * std::sqrt(2.0) / (o.radius + cfg.vessel.r_a));
  }
  return worst;
}

OcpProblem base_problem(const ScenarioConfig& cfg, const State& s, const PlanMemory& memory,
                        ControllerVariant variant) {
  OcpProblem ocp;
  ocp.horizon = cfg.horizon;
  ocp.ts = cfg.ts;
  ocp.x0 = s.flat();
  ocp.r_d = cfg.goal;
  ocp.u_prev = memory.u_prev;
  ocp.omega_prev = memory.omega_prev;
  ocp.u_min = cfg.u_min;
  ocp.u_max = cfg.u_max;
  ocp.weights = cfg.weights;
  ocp.vessel = cfg.vessel;
  ocp.injection = cfg.injection;
  ocp.safety.obstacles = cfg.obstacles;
  ocp.safety.borders = cfg.borders;
  ocp.safety.cbf = cfg.cbf;
  ocp.safety.border_mode = variant == ControllerVariant::rmpc_hard_border
                               ? BorderMode::hard
                               : BorderMode::barrier_decay;
  if (variant != ControllerVariant::mpc_nominal) {
    const double pos_margin =
        cfg.cbf_margin ? *cfg.cbf_margin : derived_position_margin(cfg);
    ocp.safety.border_margin = pos_margin;  // |grad border_h| == 1
    ocp.safety.obstacle_margin = pos_margin * obstacle_gradient_bound(cfg);
  }
  ocp.omega_seq.assign(cfg.horizon, Vec3::Zero());
  return ocp;
}

struct Trajectory {
  std::vector<Vec6> states;  // x_1..x_N
  std::vector<Vec3> inputs;  // u_0..u_{N-1}
};

Trajectory initial_trajectory(const ScenarioConfig& cfg, const State& s,
                              const PlanMemory& memory) {
  Trajectory tr;
  if (memory.has_plan && static_cast<int>(memory.plan_states.size()) == cfg.horizon) {
    // shift the previous plan one stage, repeating the tail
    tr.states.assign(memory.plan_states.begin() + 1, memory.plan_states.end());
    tr.states.push_back(memory.plan_states.back());
    tr.inputs.assign(memory.plan_inputs.begin() + 1, memory.plan_inputs.end());
    tr.inputs.push_back(memory.plan_inputs.back());
  } else {
    tr.states.assign(cfg.horizon, s.flat());
    tr.inputs.assign(cfg.horizon, Vec3::Zero());
  }
  return tr;
}

// Greedy per-stage worst case along a frozen trajectory: stage k's selection
// sees the stage k-1 selection through the input-increment term.
std::vector<std::pair<int, int>> select_worst(const ScenarioConfig& cfg, const State& s,
                                              const PlanMemory& memory, const Trajectory& tr,
                                              const DisturbanceGrid& grid,
                                              std::vector<Vec3>& omega_out) {
  std::vector<std::pair<int, int>> idx(cfg.horizon);
  omega_out.assign(cfg.horizon, Vec3::Zero());
  for (int k = 0; k < cfg.horizon; ++k) {
    const Vec6 xk = k == 0 ? s.flat() : tr.states[k - 1];
    const Vec3 uk = tr.inputs[k];
    const Vec3 up = k == 0 ? memory.u_prev : tr.inputs[k - 1];
    const Vec3 omp = k == 0 ? memory.omega_prev : omega_out[k - 1];
    idx[k] = worst_case_omega_index(xk, uk, up, omp, grid, cfg.weights, cfg.goal);
    omega_out[k] = Vec3(grid.levels_x[idx[k].first], grid.levels_y[idx[k].second], 0.0);
  }
  return idx;
}

std::vector<double> barrier_values_obstacles(const ScenarioConfig& cfg,
                                             const Eigen::Vector2d& p) {
  std::vector<double> h;
  h.reserve(cfg.obstacles.size());
  for (const auto& o : cfg.obstacles) h.push_back(obstacle_h(p, o, cfg.vessel.r_a));
  return h;
}

std::vector<double> barrier_values_borders(const ScenarioConfig& cfg, const Eigen::Vector2d& p) {
  std::vector<double> h;
  h.reserve(cfg.borders.size());
  for (const auto& b : cfg.borders) h.push_back(border_h(p, b, cfg.vessel));
  return h;
}

}  // namespace

const char* to_string(RunOutcome o) {
  switch (o) {
    case RunOutcome::arrived: return "arrived";
    case RunOutcome::step_cap: return "step_cap";
    case RunOutcome::aborted: return "aborted";
  }
  return "unknown";
}

double derived_position_margin(const ScenarioConfig& cfg) {
  // One-step position drift bound between the predicted and realized
  // disturbance: the force error is inside the disturbance box, acts through
  // the inverse mass, and integrates over one sample into position.
  const auto mi = detail::mass_inverse(cfg.vessel);
  const double span = cfg.disturbance.w_max - cfg.disturbance.w_min;
  const double force_err = std::hypot(span, span) * cfg.flow_scale;
  return 0.5 * cfg.ts * cfg.ts * std::max(mi.a00, mi.a11) * force_err;
}

PlanStepResult plan_step(const State& s, PlanMemory& memory, const ScenarioConfig& cfg,
                         ControllerVariant variant) {
  PlanStepResult out;
  OcpProblem ocp = base_problem(cfg, s, memory, variant);
  Trajectory tr = initial_trajectory(cfg, s, memory);

  const bool robust = variant != ControllerVariant::mpc_nominal;
  const DisturbanceGrid grid = robust ? make_grid(cfg.disturbance) : DisturbanceGrid{};

  SolveOptions opts;
  if (std::getenv("ASVNAV_PLAN_TRACE")) opts.trace_stream = &std::cerr;  // TEMP
  if (memory.has_plan) {  // seed from the previous step's (shifted) solve
    opts.warm_active = memory.warm_active;
    opts.warm_lambda = memory.warm_lambda;
    opts.warm_mu = memory.warm_mu;
  }
  std::vector<Vec3> omega(cfg.horizon, Vec3::Zero());
  std::vector<std::pair<int, int>> prev_idx;
  SolveReport rep;
  bool solved = false;

  const int outer_cap = robust ? kMaxOuterIterations : 1;
  int outer = 0;
  while (outer < outer_cap) {
    if (robust) {
      const auto idx = select_worst(cfg, s, memory, tr, grid, omega);
      if (!prev_idx.empty() && idx == prev_idx) break;  // selection fixed point
      prev_idx = idx;
      ocp.omega_seq = omega;
    }
    ++outer;

    const NlpSpec nlp = assemble(ocp);
    rep = solve(nlp, pack_decision(ocp, tr.states, tr.inputs), opts);
    opts.warm_active = rep.active;  // later solves differ only in omega_seq
    opts.warm_lambda = rep.lambda_eq;
    opts.warm_mu = rep.mu_in;
    if (rep.status == SolveStatus::infeasible_qp ||
        rep.status == SolveStatus::numerical_failure) {
      ASV_LOG(warn, "plan_step: solver %s at outer iteration %d", to_string(rep.status), outer);
      out.diag.status = rep.status;
      out.diag.outer_iterations = outer;
      out.diag.used_fallback = true;
      out.tau = memory.u_prev;  // hold the last applied input
      ++memory.consecutive_failures;
      memory.has_plan = false;
      return out;
    }
    const OcpSolution sol = unpack_solution(ocp, rep);
    tr.states = sol.states;
    tr.inputs = sol.inputs;
    solved = true;
  }

  if (!solved) {  // defensive; outer_cap >= 1 always runs one solve
    out.diag.used_fallback = true;
    out.tau = memory.u_prev;
    ++memory.consecutive_failures;
    return out;
  }

  out.tau = tr.inputs[0];
  out.diag.status = rep.status;
  out.diag.objective = rep.objective;
  out.diag.kkt_residual = rep.kkt_residual;
  out.diag.sqp_iterations = rep.iterations;
  out.diag.outer_iterations = outer;
  out.diag.omega_worst = robust ? omega[0] : Vec3::Zero();

  memory.u_prev = tr.inputs[0];
  memory.omega_prev = out.diag.omega_worst;
  memory.has_plan = true;
  memory.plan_states = tr.states;
  memory.plan_inputs = tr.inputs;
  memory.plan_omegas = robust ? omega : std::vector<Vec3>(cfg.horizon, Vec3::Zero());
  memory.consecutive_failures = 0;

  // Shift the solver warm-start state one stage to line up with the next
  // step's decision vector, mirroring the plan shift above. Stage-0 rows
  // drop out; tail estimates start at zero and refill on the next solve.
  {
    const int n_stage =
        static_cast<int>(cfg.obstacles.size() + cfg.borders.size());  // ineq rows per stage
    const int mi = n_stage * cfg.horizon;
    const int n_u = 3 * cfg.horizon;  // box rows per side
    memory.warm_active.clear();
    for (int i : rep.active) {
      if (i < mi) {
        if (i >= n_stage) memory.warm_active.push_back(i - n_stage);
      } else {
        const int b = i - mi;
        const int side = b / n_u;
        const int off = b % n_u;
        if (off >= 3) memory.warm_active.push_back(mi + side * n_u + off - 3);
      }
    }
    const int m_eq = 6 * cfg.horizon;
    memory.warm_lambda = VectorXd::Zero(m_eq);
    if (rep.lambda_eq.size() == m_eq && cfg.horizon > 1) {
      memory.warm_lambda.head(m_eq - 6) = rep.lambda_eq.tail(m_eq - 6);
    }
    memory.warm_mu = VectorXd::Zero(mi);
    if (rep.mu_in.size() == mi && cfg.horizon > 1 && n_stage > 0) {
      memory.warm_mu.head(mi - n_stage) = rep.mu_in.tail(mi - n_stage);
    }
  }
  return out;
}

TrajectoryLog run_closed_loop(const ScenarioConfig& cfg, ControllerVariant variant) {
  TrajectoryLog log;
  log.scenario_hash = cfg.hash();
  log.variant = to_string(variant);
  log.arrival_time = kNan;

  State s = cfg.start;
  PlanMemory memory;
  Vec3 u_applied_prev = Vec3::Zero();
  Vec3 omega_realized_prev = Vec3::Zero();
  RunOutcome outcome = RunOutcome::step_cap;

  const Eigen::Vector2d goal_xy(cfg.goal[0], cfg.goal[1]);
  int step = 0;
  for (; step < cfg.step_cap; ++step) {
    const Eigen::Vector2d pos(s.eta.x, s.eta.y);
    if ((pos - goal_xy).norm() < cfg.arrival_tolerance) {
      outcome = RunOutcome::arrived;
      log.arrival_time = step * cfg.ts;
      break;
    }

    const PlanStepResult res = plan_step(s, memory, cfg, variant);
    if (res.diag.used_fallback && memory.consecutive_failures >= 2) {
      outcome = RunOutcome::aborted;
      break;
    }

    const Vec3 omega_realized = cfg.flow_scale * realized_disturbance(s.eta.x, s.eta.y);

    LogRecord rec;
    rec.step = step;
    rec.t = step * cfg.ts;
    rec.state = s;
    rec.tau = res.tau;
    rec.omega_worst = res.diag.omega_worst;
    rec.omega_realized = omega_realized;
    rec.stage_cost = stage_cost(s.flat(), res.tau, u_applied_prev, omega_realized,
                                omega_realized_prev, cfg.weights, cfg.goal);
    rec.objective = res.diag.objective;
    rec.kkt_residual = res.diag.kkt_residual;
    rec.outer_iterations = res.diag.outer_iterations;
    rec.status = res.diag.used_fallback ? "held" : to_string(res.diag.status);
    rec.h_obstacles = barrier_values_obstacles(cfg, pos);
    rec.h_borders = barrier_values_borders(cfg, pos);
    log.records.push_back(rec);

    s = discrete_step(s, res.tau, omega_realized, cfg.ts, cfg.vessel);
    u_applied_prev = res.tau;
    omega_realized_prev = omega_realized;
  }
  log.steps = step;
  log.outcome = outcome;

  LogRecord term;
  term.step = step;
  term.t = step * cfg.ts;
  term.state = s;
  term.tau = u_applied_prev;
  term.omega_realized = cfg.flow_scale * realized_disturbance(s.eta.x, s.eta.y);
  term.status = to_string(outcome);
  term.h_obstacles = barrier_values_obstacles(cfg, {s.eta.x, s.eta.y});
  term.h_borders = barrier_values_borders(cfg, {s.eta.x, s.eta.y});
  log.records.push_back(term);
  return log;
}

ComparisonReport compare_runs(const std::vector<TrajectoryLog>& logs) {
  ComparisonReport rep;
  if (logs.empty()) return rep;
  rep.scenario_hash = logs.front().scenario_hash;
  for (const auto& log : logs) {
    if (log.scenario_hash != rep.scenario_hash) {
      throw DimensionError("compare_runs: trajectory logs come from different scenarios");
    }
    RunSummary s;
    s.variant = log.variant;
    s.outcome = log.outcome;
    s.steps = log.steps;
    s.arrival_time = log.arrival_time;
    s.min_h_obstacle = std::numeric_limits<double>::infinity();
    s.min_h_border = std::numeric_limits<double>::infinity();
    for (const auto& rec : log.records) {
      for (double h : rec.h_obstacles) s.min_h_obstacle = std::min(s.min_h_obstacle, h);
      for (double h : rec.h_borders) s.min_h_border = std::min(s.min_h_border, h);
      s.total_stage_cost += rec.stage_cost;
      if (rec.status == "converged") {
        s.max_kkt_converged = std::max(s.max_kkt_converged, rec.kkt_residual);
      }
    }
    rep.runs.push_back(s);
  }
  return rep;
}

}  // namespace asv

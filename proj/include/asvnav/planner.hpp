#pragma once

#include <string>
#include <vector>

#include "asvnav/ocp.hpp"
#include "asvnav/scenario.hpp"

namespace asv {

// Controller state carried between receding-horizon steps: last applied
// input, the disturbance that was assumed for it, and the previous plan for
// warm starting.
struct PlanMemory {
  Vec3 u_prev = Vec3::Zero();
  Vec3 omega_prev = Vec3::Zero();
  bool has_plan = false;
  std::vector<Vec6> plan_states;   // x_1..x_N of the last accepted solve
  std::vector<Vec3> plan_inputs;   // u_0..u_{N-1}
  std::vector<Vec3> plan_omegas;   // per-stage assumed disturbances
  int consecutive_failures = 0;
  // solver warm-start state from the last accepted solve (shifted one stage)
  std::vector<int> warm_active;
  VectorXd warm_lambda;
  VectorXd warm_mu;
};

struct StepDiagnostics {
  SolveStatus status = SolveStatus::numerical_failure;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int sqp_iterations = 0;
  int outer_iterations = 0;  // worst-case/solve alternations actually run
  Vec3 omega_worst = Vec3::Zero();  // first-stage assumed disturbance
  bool used_fallback = false;       // solver failed; previous input reapplied
};

struct PlanStepResult {
  ControlInput tau = ControlInput::Zero();
  StepDiagnostics diag;
};

// One receding-horizon step for the chosen controller variant. Robust
// variants alternate between exhaustive per-stage worst-case selection and
// an NLP solve with the selection frozen, until the selected grid points
// repeat (at most max_outer_iterations alternations). On solver failure the
// previous input is reapplied and the step is flagged.
PlanStepResult plan_step(const State& s, PlanMemory& memory, const ScenarioConfig& cfg,
                         ControllerVariant variant);

struct LogRecord {
  int step = 0;
  double t = 0.0;
  State state;
  Vec3 tau = Vec3::Zero();
  Vec3 omega_worst = Vec3::Zero();     // assumed for stage 0 of the plan
  Vec3 omega_realized = Vec3::Zero();  // what the plant experienced
  double stage_cost = 0.0;             // realized running cost at this step
  double objective = 0.0;              // predicted optimal cost
  double kkt_residual = 0.0;
  int outer_iterations = 0;
  std::string status;                  // solver status or terminal outcome
  std::vector<double> h_obstacles;     // barrier values at this state
  std::vector<double> h_borders;
};

enum class RunOutcome { arrived, step_cap, aborted };

const char* to_string(RunOutcome o);

struct TrajectoryLog {
  std::uint64_t scenario_hash = 0;
  std::string variant;
  RunOutcome outcome = RunOutcome::step_cap;
  int steps = 0;              // applied control steps
  double arrival_time = 0.0;  // NaN unless outcome == arrived
  std::vector<LogRecord> records;  // one per step plus a terminal record
};

// Simulates the plant (same integrator as the predictor, driven by the
// spatially varying flow field scaled by cfg.flow_scale) under the chosen
// controller until arrival, the step cap, or two consecutive solver
// failures.
TrajectoryLog run_closed_loop(const ScenarioConfig& cfg, ControllerVariant variant);

struct RunSummary {
  std::string variant;
  RunOutcome outcome = RunOutcome::step_cap;
  int steps = 0;
  double arrival_time = 0.0;
  double min_h_obstacle = 0.0;  // over all logged states; +inf if none
  double min_h_border = 0.0;
  double total_stage_cost = 0.0;
  double max_kkt_converged = 0.0;
};

struct ComparisonReport {
  std::uint64_t scenario_hash = 0;
  std::vector<RunSummary> runs;
};

// Summarizes runs side by side. All logs must share a scenario hash;
// otherwise throws DimensionError.
ComparisonReport compare_runs(const std::vector<TrajectoryLog>& logs);

// Effective constraint tightening used by the robust variants when the
// scenario asks for the derived value: a bound on how far one plant step
// can drift from the prediction within the disturbance box, mapped through
// each barrier's gradient scale.
double derived_position_margin(const ScenarioConfig& cfg);

}  // namespace asv

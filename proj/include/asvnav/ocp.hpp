#pragma once

#include <utility>
#include <vector>

#include "asvnav/flow.hpp"
#include "asvnav/nlp.hpp"
#include "asvnav/safety.hpp"
#include "asvnav/sqp.hpp"
#include "asvnav/vessel.hpp"

namespace asv {

// Quadratic tracking weights: state deviation, terminal state deviation, and
// flow-compensated input increment.
struct Weights {
  Vec6 q;
  Vec6 q_terminal;
  Vec3 r;

  Weights() {
    q << 2, 2, 2, 1, 1, 1;
    q_terminal << 3, 3, 3, 1, 1, 1;
    r << 0.1, 0.1, 0.01;
  }
};

// One stage of the tracking cost. The input is penalized through its
// flow-compensated increment: u_tilde = u - [omega_x, omega_y, 0], and the
// increment is taken against the previous stage's compensated input.
double stage_cost(const Vec6& x, const Vec3& u, const Vec3& u_prev, const Vec3& omega,
                  const Vec3& omega_prev, const Weights& w, const Vec6& r_d);

double terminal_cost(const Vec6& x_n, const Weights& w, const Vec6& r_d);

// Exhaustive per-stage worst case: scans every grid candidate (outer loop
// over the x-levels, inner over the y-levels) and keeps the first strictly
// greatest stage cost.
Vec3 worst_case_omega(const Vec6& x, const Vec3& u, const Vec3& u_prev,
                      const Vec3& omega_prev, const DisturbanceGrid& grid,
                      const Weights& w, const Vec6& r_d);
std::pair<int, int> worst_case_omega_index(const Vec6& x, const Vec3& u, const Vec3& u_prev,
                                           const Vec3& omega_prev, const DisturbanceGrid& grid,
                                           const Weights& w, const Vec6& r_d);

// How border constraints enter the program: as barrier-decay rows (paired
// with gamma_b) or as hard per-stage clearance rows.
enum class BorderMode { barrier_decay, hard };

struct SafetySpec {
  std::vector<Obstacle> obstacles;
  std::vector<BorderLine> borders;
  CbfParams cbf;
  BorderMode border_mode = BorderMode::barrier_decay;
  // Constant tightening subtracted from each constraint row (barrier units).
  // Gives the prediction headroom for the gap between the modeled worst-case
  // disturbance and the realized one; 0 = plain constraints.
  double obstacle_margin = 0.0;
  double border_margin = 0.0;
};

// Finite-horizon tracking problem with the disturbance sequence held fixed.
struct OcpProblem {
  int horizon = 10;
  double ts = 0.2;
  Vec6 x0 = Vec6::Zero();
  Vec6 r_d = Vec6::Zero();
  Vec3 u_prev = Vec3::Zero();
  Vec3 omega_prev = Vec3::Zero();
  Vec3 u_min = Vec3::Constant(-8.0);
  Vec3 u_max = Vec3::Constant(8.0);
  Weights weights;
  SafetySpec safety;
  std::vector<Vec3> omega_seq;  // one disturbance per stage, size == horizon
  VesselParams vessel;
  DisturbanceInjection injection = DisturbanceInjection::direct;
};

// Decision-vector layout: states x_1..x_N first (6 each), then inputs
// u_0..u_{N-1} (3 each).
struct OcpLayout {
  int horizon = 0;
  int n_vars() const { return 9 * horizon; }
  int m_eq() const { return 6 * horizon; }
  int x_offset(int k) const { return 6 * (k - 1); }        // k in 1..N
  int u_offset(int k) const { return 6 * horizon + 3 * k; }  // k in 0..N-1
};

// Multiple-shooting transcription with analytic derivatives. Constraint rows
// are scaled by 1/max(1, |h at x0|) per barrier for conditioning. Throws
// DimensionError on inconsistent problem data.
NlpSpec assemble(const OcpProblem& ocp);

// Epigraph variant used for cross-validation: per-stage cost upper bounds
// become slack variables, with one inequality row per grid candidate. The
// previous-stage disturbance stays fixed at omega_seq, matching one sweep of
// the alternating scheme.
NlpSpec assemble_epigraph(const OcpProblem& ocp, const DisturbanceGrid& grid);

struct OcpSolution {
  std::vector<Vec6> states;  // x_1..x_N
  std::vector<Vec3> inputs;  // u_0..u_{N-1}
  double objective = 0.0;
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::numerical_failure;
  int iterations = 0;
};

VectorXd pack_decision(const OcpProblem& ocp, const std::vector<Vec6>& states,
                       const std::vector<Vec3>& inputs);
OcpSolution unpack_solution(const OcpProblem& ocp, const SolveReport& rep);

}  // namespace asv

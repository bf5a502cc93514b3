#pragma once

#include <iosfwd>
#include <vector>

#include "asvnav/nlp.hpp"

namespace asv {

enum class SolveStatus { converged, max_iter, infeasible_qp, numerical_failure };

const char* to_string(SolveStatus s);

struct SolveOptions {
  double tol_kkt = 1e-6;
  double tol_feas = 1e-6;
  int max_iterations = 200;
  bool keep_trace = false;          // record per-iteration data in the report
  std::ostream* trace_stream = nullptr;  // one line per iteration when set

  // Warm start from a related solve: the subproblem seeds its working set
  // from warm_active and the curvature model starts from the supplied
  // multiplier estimates instead of zero. Rediscovering the active set from
  // scratch dominates the cost of repeated solves of slowly changing
  // problems, e.g. receding-horizon steps.
  std::vector<int> warm_active;  // inequality rows expected active
  VectorXd warm_lambda;          // equality multiplier estimate (size m_eq or empty)
  VectorXd warm_mu;              // inequality multiplier estimate (size m_ineq or empty)
};

struct IterationRecord {
  int iter = 0;
  double objective = 0.0;
  double kkt = 0.0;
  double feasibility = 0.0;
  double step_norm = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  bool elastic = false;
};

struct SolveReport {
  VectorXd z;
  double objective = 0.0;
  double kkt_residual = 0.0;   // max of stationarity and complementarity
  double violation = 0.0;      // max constraint violation
  int iterations = 0;
  SolveStatus status = SolveStatus::numerical_failure;
  VectorXd lambda_eq;          // equality multipliers at the final iterate
  VectorXd mu_in;              // general inequality multipliers (not box)
  std::vector<int> active;     // final subproblem working set (for warm starts)
  std::vector<IterationRecord> trace;
};

// Sequential quadratic programming with damped-BFGS Hessian updates, an
// l1-merit Armijo line search, and elastic QP subproblems when a
// linearization is infeasible. Deterministic for identical inputs.
SolveReport solve(const NlpSpec& nlp, VectorXd z0, const SolveOptions& opts = {});

}  // namespace asv

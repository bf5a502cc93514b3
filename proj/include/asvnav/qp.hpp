#pragma once

#include <Eigen/Dense>
#include <vector>

#include "asvnav/types.hpp"

namespace asv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Convex QP:  min 1/2 p'Hp + g'p   s.t.  a_eq p = b_eq,  a_in p >= b_in.
// H must be symmetric positive definite (the SQP layer guarantees this via
// damped BFGS updates).
struct QpProblem {
  MatrixXd h;
  VectorXd g;
  MatrixXd a_eq;
  VectorXd b_eq;
  MatrixXd a_in;
  VectorXd b_in;
  // Per-inequality-row elastic weight. weight > 0 marks a row that may take
  // slack (penalized at rho * weight) when the QP is infeasible as stated;
  // weight == 0 marks a hard row. Empty means every row has weight 1.
  VectorXd elastic_weight;
};

enum class QpStatus {
  optimal,     // solved, all constraints hold
  elastic,     // solved with some inequality slack (locally infeasible QP)
  infeasible,  // even the elastic relaxation is infeasible (hard rows clash)
  failure      // iteration cap or numerical breakdown
};

struct QpResult {
  QpStatus status = QpStatus::failure;
  VectorXd p;
  VectorXd lambda_eq;  // equality multipliers
  VectorXd mu_in;      // inequality multipliers, >= 0
  VectorXd slack;      // per inequality row; nonzero only after elastic solves
  double max_slack = 0.0;
  int iterations = 0;
  // Inequality rows in the final working set; feed back as warm_active on the
  // next, similar QP to skip most of the active-set discovery.
  std::vector<int> active;
};

QpResult solve_qp(const QpProblem& qp, const VectorXd* warm = nullptr,
                  const std::vector<int>* warm_active = nullptr);

}  // namespace asv

#pragma once

#include <Eigen/Core>
#include <functional>
#include <utility>
#include <vector>

#include "asvnav/types.hpp"

namespace asv {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Dense smooth NLP:
//   min f(z)   s.t.  c_eq(z) = 0,  c_in(z) >= 0,  lower <= z <= upper.
// Derivative callbacks are optional; gradients() falls back to central
// finite differences when they are missing.
struct NlpSpec {
  int n_vars = 0;
  int m_eq = 0;
  int m_in = 0;

  std::function<double(const VectorXd&)> objective;
  std::function<VectorXd(const VectorXd&)> eq;     // size m_eq
  std::function<VectorXd(const VectorXd&)> ineq;   // size m_in

  std::function<VectorXd(const VectorXd&)> gradient;          // optional
  std::function<MatrixXd(const VectorXd&)> eq_jacobian;       // optional
  std::function<MatrixXd(const VectorXd&)> ineq_jacobian;     // optional

  VectorXd lower;  // box bounds; +-infinity marks a free variable
  VectorXd upper;

  // Optional constant curvature model (symmetric positive definite, n x n):
  // the solver seeds its quasi-Newton matrix from it instead of the identity.
  // Worth providing whenever the objective is an explicit quadratic.
  MatrixXd hessian0;

  // Optional exact Lagrangian curvature: hessian of
  //   objective(z) - lambda'eq(z) - mu'ineq(z)
  // at z (may be indefinite; the solver convexifies it). When provided the
  // solver evaluates it every iteration with its current multiplier estimates
  // instead of maintaining a quasi-Newton matrix. This is what rescues badly
  // scaled problems: multiplier-weighted constraint curvature can exceed the
  // objective curvature by orders of magnitude, and secant updates learn it
  // too slowly to be usable.
  std::function<MatrixXd(const VectorXd&, const VectorXd&, const VectorXd&)> lagrangian_hessian;

  // Structural nonzeros of [eq; ineq] Jacobians, advisory only. The dense
  // solver ignores it; it exists so sparse backends could exploit it.
  std::vector<std::pair<int, int>> jacobian_sparsity;
};

struct Derivatives {
  VectorXd gradient;
  MatrixXd eq_jac;   // m_eq x n
  MatrixXd ineq_jac; // m_in x n
};

// Thrown when a derivative evaluation produces NaN/inf. row is the offending
// constraint row, or -1 for the objective gradient.
struct NonFiniteDerivative : Error {
  NonFiniteDerivative(const std::string& msg, int row_) : Error(msg), row(row_) {}
  int row = -1;
};

// Evaluates all first derivatives at z, preferring analytic callbacks and
// falling back to central differences otherwise. Validates finiteness.
Derivatives gradients(const NlpSpec& nlp, const VectorXd& z);

}  // namespace asv

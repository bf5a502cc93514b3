#include "asvnav/nlp.hpp"

#include <cmath>
#include <string>

namespace asv {

namespace {

constexpr double kFdStep = 1e-6;

VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& z) {
  VectorXd g(z.size());
  VectorXd zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double h = kFdStep * std::max(1.0, std::abs(z[i]));
    zp[i] = z[i] + h;
    const double fp = f(zp);
    zp[i] = z[i] - h;
    const double fm = f(zp);
    zp[i] = z[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& c, const VectorXd& z,
                     int rows) {
  MatrixXd j(rows, z.size());
  VectorXd zp = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double h = kFdStep * std::max(1.0, std::abs(z[i]));
    zp[i] = z[i] + h;
    const VectorXd cp = c(zp);
    zp[i] = z[i] - h;
    const VectorXd cm = c(zp);
    zp[i] = z[i];
    j.col(i) = (cp - cm) / (2.0 * h);
  }
  return j;
}

void check_finite_vector(const VectorXd& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw NonFiniteDerivative(std::string(what) + " has a non-finite entry at index " +
                                    std::to_string(i),
                                -1);
    }
  }
}

void check_finite_rows(const MatrixXd& m, const char* what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (!m.row(r).allFinite()) {
      throw NonFiniteDerivative(std::string(what) + " row " + std::to_string(r) +
                                    " has a non-finite entry",
                                static_cast<int>(r));
    }
  }
}

}  // namespace

Derivatives gradients(const NlpSpec& nlp, const VectorXd& z) {
  if (z.size() != nlp.n_vars) {
    throw DimensionError("gradients: point has size " + std::to_string(z.size()) +
                         " but the problem has " + std::to_string(nlp.n_vars) + " variables");
  }
  Derivatives d;
  d.gradient = nlp.gradient ? nlp.gradient(z) : fd_gradient(nlp.objective, z);
  check_finite_vector(d.gradient, "objective gradient");

  if (nlp.m_eq > 0) {
    d.eq_jac = nlp.eq_jacobian ? nlp.eq_jacobian(z) : fd_jacobian(nlp.eq, z, nlp.m_eq);
    check_finite_rows(d.eq_jac, "equality Jacobian");
  } else {
    d.eq_jac.resize(0, nlp.n_vars);
  }
  if (nlp.m_in > 0) {
    d.ineq_jac = nlp.ineq_jacobian ? nlp.ineq_jacobian(z) : fd_jacobian(nlp.ineq, z, nlp.m_in);
    check_finite_rows(d.ineq_jac, "inequality Jacobian");
  } else {
    d.ineq_jac.resize(0, nlp.n_vars);
  }
  return d;
}

}  // namespace asv

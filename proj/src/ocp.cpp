#include "asvnav/ocp.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace asv {

namespace {

Vec3 compensated(const Vec3& u, const Vec3& omega) {
  return {u[0] - omega[0], u[1] - omega[1], u[2]};
}

// Shared, immutable assembly context captured by the NLP callbacks.
struct OcpData {
  OcpProblem ocp;
  OcpLayout layout;
  std::vector<double> obstacle_scale;  // 1/max(1, |h_o(x0)|)
  std::vector<double> border_scale;
  int rows_per_stage = 0;

  Vec6 x_at(const VectorXd& z, int k) const {
    return k == 0 ? ocp.x0 : Vec6(z.segment<6>(layout.x_offset(k)));
  }
  Vec3 u_at(const VectorXd& z, int k) const { return z.segment<3>(layout.u_offset(k)); }
};

void validate(const OcpProblem& ocp) {
  if (ocp.horizon < 1) throw DimensionError("ocp horizon must be >= 1");
  if (!(ocp.ts > 0.0)) throw DimensionError("ocp sample time must be positive");
  if (static_cast<int>(ocp.omega_seq.size()) != ocp.horizon) {
    throw DimensionError("ocp omega_seq has " + std::to_string(ocp.omega_seq.size()) +
                         " entries but the horizon is " + std::to_string(ocp.horizon));
  }
  for (int i = 0; i < 3; ++i) {
    if (!(ocp.u_min[i] < ocp.u_max[i])) {
      throw DimensionError("ocp input bounds must satisfy u_min < u_max componentwise");
    }
  }
  if ((ocp.weights.q.array() < 0.0).any() || (ocp.weights.q_terminal.array() < 0.0).any() ||
      (ocp.weights.r.array() < 0.0).any()) {
    throw DimensionError("ocp weights must be nonnegative");
  }
  const auto check_gamma = [](double g, const char* name) {
    if (!(g > 0.0) || g > 1.0) {
      throw DimensionError(std::string("barrier decay rate ") + name + " must lie in (0, 1]");
    }
  };
  if (!ocp.safety.obstacles.empty()) check_gamma(ocp.safety.cbf.gamma_o, "gamma_o");
  if (!ocp.safety.borders.empty()) check_gamma(ocp.safety.cbf.gamma_b, "gamma_b");
}

std::shared_ptr<OcpData> make_data(const OcpProblem& ocp) {
  validate(ocp);
  auto data = std::make_shared<OcpData>();
  data->ocp = ocp;
  data->layout.horizon = ocp.horizon;
  const Eigen::Vector2d p0(ocp.x0[0], ocp.x0[1]);
  for (const auto& o : ocp.safety.obstacles) {
    data->obstacle_scale.push_back(1.0 / std::max(1.0, std::abs(obstacle_h(p0, o, ocp.vessel.r_a))));
  }
  for (const auto& b : ocp.safety.borders) {
    data->border_scale.push_back(1.0 / std::max(1.0, std::abs(border_h(p0, b, ocp.vessel))));
  }
  data->rows_per_stage =
      static_cast<int>(ocp.safety.obstacles.size() + ocp.safety.borders.size());
  return data;
}

double objective_impl(const OcpData& d, const VectorXd& z) {
  const OcpProblem& ocp = d.ocp;
  double j = 0.0;
  for (int k = 0; k < ocp.horizon; ++k) {
    const Vec6 xk = d.x_at(z, k);
    const Vec3 uk = d.u_at(z, k);
    const Vec3 up = k == 0 ? ocp.u_prev : d.u_at(z, k - 1);
    const Vec3 om = ocp.omega_seq[k];
    const Vec3 omp = k == 0 ? ocp.omega_prev : ocp.omega_seq[k - 1];
    j += stage_cost(xk, uk, up, om, omp, ocp.weights, ocp.r_d);
  }
  j += terminal_cost(d.x_at(z, ocp.horizon), ocp.weights, ocp.r_d);
  return j;
}

VectorXd gradient_impl(const OcpData& d, const VectorXd& z) {
  const OcpProblem& ocp = d.ocp;
  const int n = d.layout.n_vars();
  VectorXd g = VectorXd::Zero(n);
  for (int k = 1; k < ocp.horizon; ++k) {
    const Vec6 dx = d.x_at(z, k) - ocp.r_d;
    g.segment<6>(d.layout.x_offset(k)) = 2.0 * ocp.weights.q.cwiseProduct(dx);
  }
  const Vec6 dxn = d.x_at(z, ocp.horizon) - ocp.r_d;
  g.segment<6>(d.layout.x_offset(ocp.horizon)) = 2.0 * ocp.weights.q_terminal.cwiseProduct(dxn);

  for (int k = 0; k < ocp.horizon; ++k) {
    const Vec3 uk = d.u_at(z, k);
    const Vec3 up = k == 0 ? ocp.u_prev : d.u_at(z, k - 1);
    const Vec3 om = ocp.omega_seq[k];
    const Vec3 omp = k == 0 ? ocp.omega_prev : ocp.omega_seq[k - 1];
    const Vec3 du = compensated(uk, om) - compensated(up, omp);
    const Vec3 term = 2.0 * ocp.weights.r.cwiseProduct(du);
    g.segment<3>(d.layout.u_offset(k)) += term;
    if (k >= 1) g.segment<3>(d.layout.u_offset(k - 1)) -= term;
  }
  return g;
}

VectorXd eq_impl(const OcpData& d, const VectorXd& z) {
  const OcpProblem& ocp = d.ocp;
  VectorXd c(d.layout.m_eq());
  for (int k = 0; k < ocp.horizon; ++k) {
    const Vec6 pred = discrete_step(d.x_at(z, k), d.u_at(z, k), ocp.omega_seq[k], ocp.ts,
                                    ocp.vessel, ocp.injection);
    c.segment<6>(6 * k) = d.x_at(z, k + 1) - pred;
  }
  return c;
}

MatrixXd eq_jacobian_impl(const OcpData& d, const VectorXd& z) {
  const OcpProblem& ocp = d.ocp;
  MatrixXd j = MatrixXd::Zero(d.layout.m_eq(), d.layout.n_vars());
  Mat6 fx;
  Mat63 fu;
  for (int k = 0; k < ocp.horizon; ++k) {
    discrete_step_with_jacobian(d.x_at(z, k), d.u_at(z, k), ocp.omega_seq[k], ocp.ts, ocp.vessel,
                                fx, fu, ocp.injection);
    j.block<6, 6>(6 * k, d.layout.x_offset(k + 1)) = Mat6::Identity();
    if (k >= 1) j.block<6, 6>(6 * k, d.layout.x_offset(k)) = -fx;
    j.block<6, 3>(6 * k, d.layout.u_offset(k)) = -fu;
  }
  return j;
}

VectorXd ineq_impl(const OcpData& d, const VectorXd& z) {
  const OcpProblem& ocp = d.ocp;
  const int n_o = static_cast<int>(ocp.safety.obstacles.size());
  const int n_b = static_cast<int>(ocp.safety.borders.size());
  VectorXd c(d.rows_per_stage * ocp.horizon);
  int row = 0;
  for (int k = 0; k < ocp.horizon; ++k) {
    const Vec6 xk = d.x_at(z, k);
    const Vec6 xn = d.x_at(z, k + 1);
    const Eigen::Vector2d pk(xk[0], xk[1]);
    const Eigen::Vector2d pn(xn[0], xn[1]);
    for (int i = 0; i < n_o; ++i) {
      const double h_now = obstacle_h(pk, ocp.safety.obstacles[i], ocp.vessel.r_a);
      const double h_next = obstacle_h(pn, ocp.safety.obstacles[i], ocp.vessel.r_a);
      c[row++] = d.obstacle_scale[i] *
                 (cbf_residual(h_next, h_now, ocp.safety.cbf.gamma_o) - ocp.safety.obstacle_margin);
    }
    for (int i = 0; i < n_b; ++i) {
      const double h_next = border_h(pn, ocp.safety.borders[i], ocp.vessel);
      double value;
      if (ocp.safety.border_mode == BorderMode::hard) {
        value = h_next - ocp.safety.border_margin;
      } else {
        const double h_now = border_h(pk, ocp.safety.borders[i], ocp.vessel);
        value = cbf_residual(h_next, h_now, ocp.safety.cbf.gamma_b) - ocp.safety.border_margin;
      }
      c[row++] = d.border_scale[i] * value;
    }
  }
  return c;
}

// Constant Hessian of the tracking objective: state weights on the diagonal
// blocks, first-difference chain on the input blocks.
MatrixXd objective_hessian(const OcpData& d) {
  const OcpProblem& ocp = d.ocp;
  const OcpLayout& layout = d.layout;
  MatrixXd h = MatrixXd::Zero(layout.n_vars(), layout.n_vars());
  for (int k = 1; k < ocp.horizon; ++k) {
    h.block<6, 6>(layout.x_offset(k), layout.x_offset(k)) = (2.0 * ocp.weights.q).asDiagonal();
  }
  h.block<6, 6>(layout.x_offset(ocp.horizon), layout.x_offset(ocp.horizon)) =
      (2.0 * ocp.weights.q_terminal).asDiagonal();
  const Mat3 two_r = (2.0 * ocp.weights.r).asDiagonal();
  for (int k = 0; k < ocp.horizon; ++k) {
    h.block<3, 3>(layout.u_offset(k), layout.u_offset(k)) += two_r;
    if (k >= 1) {
      h.block<3, 3>(layout.u_offset(k - 1), layout.u_offset(k - 1)) += two_r;
      h.block<3, 3>(layout.u_offset(k), layout.u_offset(k - 1)) -= two_r;
      h.block<3, 3>(layout.u_offset(k - 1), layout.u_offset(k)) -= two_r;
    }
  }
  return h;
}

// Exact Hessian of the Lagrangian objective - lambda'eq - mu'ineq. The
// objective part is constant; the dynamics part is assembled per stage by
// finite-differencing the analytic step Jacobians against the stage
// multipliers (the adjoint field lambda_k'F is cheap, and its derivative is
// the only second-order term the shooting constraints carry); the obstacle
// part is analytic. Border and box rows are linear and contribute nothing.
MatrixXd lagrangian_hessian_impl(const OcpData& d, const VectorXd& z, const VectorXd& lam,
                                 const VectorXd& mu) {
  const OcpProblem& ocp = d.ocp;
  const OcpLayout& layout = d.layout;
  MatrixXd h = objective_hessian(d);

  Mat6 fx;
  Mat63 fu;
  for (int k = 0; k < ocp.horizon; ++k) {
    if (lam.size() != layout.m_eq()) break;
    const Vec6 lk = lam.segment<6>(6 * k);
    if (lk.lpNorm<Eigen::Infinity>() < 1e-12) continue;

    // adjoint field of the shooting constraint x_{k+1} - F(x_k, u_k):
    // the Lagrangian contributes +lambda_k'F, whose gradient in (x_k, u_k)
    // is [fx'lk; fu'lk]
    const auto adjoint = [&](const Vec6& xk, const Vec3& uk) {
      discrete_step_with_jacobian(xk, uk, ocp.omega_seq[k], ocp.ts, ocp.vessel, fx, fu,
                                  ocp.injection);
      Eigen::Matrix<double, 9, 1> a;
      a.head<6>() = fx.transpose() * lk;
      a.tail<3>() = fu.transpose() * lk;
      return a;
    };

    const Vec6 xk = d.x_at(z, k);
    const Vec3 uk = d.u_at(z, k);
    const Eigen::Matrix<double, 9, 1> a0 = adjoint(xk, uk);
    const int nv = k == 0 ? 3 : 9;  // x_0 is a parameter, not a variable
    Eigen::Matrix<double, 9, 9> block = Eigen::Matrix<double, 9, 9>::Zero();
    // entries beyond this bound cannot come from the model's genuine
    // curvature; they appear when the difference interval straddles a kink
    // of the |v|v drag terms and reads the Jacobian jump as curvature
    const double cap = 50.0 * (1.0 + ocp.ts * lk.lpNorm<Eigen::Infinity>());
    const auto fd_col = [&](int col, double eps) {
      Vec6 xp = xk;
      Vec3 up = uk;
      double* entry = col < 6 ? &xp[col] : &up[col - 6];
      *entry += eps;
      return ((adjoint(xp, up) - a0) / eps).eval();
    };
    for (int j = 0; j < nv; ++j) {
      const int col = k == 0 ? 6 + j : j;
      const double base = col < 6 ? xk[col] : uk[col - 6];
      const double eps = (base < 0.0 ? -1e-6 : 1e-6) * (1.0 + std::abs(base));
      Eigen::Matrix<double, 9, 1> c = fd_col(col, eps);
      if (c.cwiseAbs().maxCoeff() > cap) {
        // a kink sits on one side only: the other one-sided difference is clean
        const Eigen::Matrix<double, 9, 1> c2 = fd_col(col, -eps);
        if (c2.cwiseAbs().maxCoeff() < c.cwiseAbs().maxCoeff()) c = c2;
      }
      block.col(col) = c;
    }
    block = 0.5 * (block + block.transpose()).eval();

    const int uo = layout.u_offset(k);
    h.block<3, 3>(uo, uo) += block.block<3, 3>(6, 6);
    if (k >= 1) {
      const int xo = layout.x_offset(k);
      h.block<6, 6>(xo, xo) += block.block<6, 6>(0, 0);
      h.block<6, 3>(xo, uo) += block.block<6, 3>(0, 6);
      h.block<3, 6>(uo, xo) += block.block<3, 6>(6, 0);
    }
  }

  // mu-weighted barrier curvature: the obstacle barrier is quadratic in the
  // planar position, entering through h(x_{k+1}) and -(1-gamma) h(x_k)
  const int n_o = static_cast<int>(ocp.safety.obstacles.size());
  if (mu.size() == d.rows_per_stage * ocp.horizon && n_o > 0) {
    for (int k = 0; k < ocp.horizon; ++k) {
      for (int i = 0; i < n_o; ++i) {
        const double m = mu[d.rows_per_stage * k + i];
        if (m <= 0.0) continue;
        const Obstacle& o = ocp.safety.obstacles[i];
        const double rr = o.radius + ocp.vessel.r_a;
        const double curv = d.obstacle_scale[i] * 2.0 / (rr * rr);
        const int xo_next = layout.x_offset(k + 1);
        h.block<2, 2>(xo_next, xo_next) -= m * curv * Eigen::Matrix2d::Identity();
        if (k >= 1) {
          const int xo = layout.x_offset(k);
          h.block<2, 2>(xo, xo) +=
              m * curv * (1.0 - ocp.safety.cbf.gamma_o) * Eigen::Matrix2d::Identity();
        }
      }
    }
  }
  return h;
}

MatrixXd ineq_jacobian_impl(const OcpData& d, const VectorXd& z) {
  const OcpProblem& ocp = d.ocp;
  const int n_o = static_cast<int>(ocp.safety.obstacles.size());
  const int n_b = static_cast<int>(ocp.safety.borders.size());
  MatrixXd j = MatrixXd::Zero(d.rows_per_stage * ocp.horizon, d.layout.n_vars());
  int row = 0;
  for (int k = 0; k < ocp.horizon; ++k) {
    const Vec6 xk = d.x_at(z, k);
    const Vec6 xn = d.x_at(z, k + 1);
    const Eigen::Vector2d pk(xk[0], xk[1]);
    const Eigen::Vector2d pn(xn[0], xn[1]);
    for (int i = 0; i < n_o; ++i) {
      const double s = d.obstacle_scale[i];
      const Eigen::Vector2d gn = obstacle_h_grad(pn, ocp.safety.obstacles[i], ocp.vessel.r_a);
      j.block<1, 2>(row, d.layout.x_offset(k + 1)) = s * gn.transpose();
      if (k >= 1) {
        const Eigen::Vector2d gk = obstacle_h_grad(pk, ocp.safety.obstacles[i], ocp.vessel.r_a);
        j.block<1, 2>(row, d.layout.x_offset(k)) =
            -s * (1.0 - ocp.safety.cbf.gamma_o) * gk.transpose();
      }
      ++row;
    }
    for (int i = 0; i < n_b; ++i) {
      const double s = d.border_scale[i];
      const Eigen::Vector2d gb = border_h_grad(ocp.safety.borders[i]);
      j.block<1, 2>(row, d.layout.x_offset(k + 1)) = s * gb.transpose();
      if (ocp.safety.border_mode != BorderMode::hard && k >= 1) {
        j.block<1, 2>(row, d.layout.x_offset(k)) =
            -s * (1.0 - ocp.safety.cbf.gamma_b) * gb.transpose();
      }
      ++row;
    }
  }
  return j;
}

}  // namespace

double stage_cost(const Vec6& x, const Vec3& u, const Vec3& u_prev, const Vec3& omega,
                  const Vec3& omega_prev, const Weights& w, const Vec6& r_d) {
  const Vec6 dx = x - r_d;
  const Vec3 du = compensated(u, omega) - compensated(u_prev, omega_prev);
  return dx.dot(w.q.cwiseProduct(dx)) + du.dot(w.r.cwiseProduct(du));
}

double terminal_cost(const Vec6& x_n, const Weights& w, const Vec6& r_d) {
  const Vec6 dx = x_n - r_d;
  return dx.dot(w.q_terminal.cwiseProduct(dx));
}

std::pair<int, int> worst_case_omega_index(const Vec6& x, const Vec3& u, const Vec3& u_prev,
                                           const Vec3& omega_prev, const DisturbanceGrid& grid,
                                           const Weights& w, const Vec6& r_d) {
  int best_i = 0, best_j = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(grid.levels_x.size()); ++i) {
    for (int j = 0; j < static_cast<int>(grid.levels_y.size()); ++j) {
      const Vec3 cand(grid.levels_x[i], grid.levels_y[j], 0.0);
      const double value = stage_cost(x, u, u_prev, cand, omega_prev, w, r_d);
      if (value > best) {  // strict: first maximizer in scan order wins
        best = value;
        best_i = i;
        best_j = j;
      }
    }
  }
  return {best_i, best_j};
}

Vec3 worst_case_omega(const Vec6& x, const Vec3& u, const Vec3& u_prev, const Vec3& omega_prev,
                      const DisturbanceGrid& grid, const Weights& w, const Vec6& r_d) {
  const auto [i, j] = worst_case_omega_index(x, u, u_prev, omega_prev, grid, w, r_d);
  return {grid.levels_x[i], grid.levels_y[j], 0.0};
}

NlpSpec assemble(const OcpProblem& ocp) {
  auto data = make_data(ocp);
  const OcpLayout& layout = data->layout;

  NlpSpec nlp;
  nlp.n_vars = layout.n_vars();
  nlp.m_eq = layout.m_eq();
  nlp.m_in = data->rows_per_stage * ocp.horizon;

  nlp.objective = [data](const VectorXd& z) { return objective_impl(*data, z); };
  nlp.gradient = [data](const VectorXd& z) { return gradient_impl(*data, z); };
  nlp.eq = [data](const VectorXd& z) { return eq_impl(*data, z); };
  nlp.eq_jacobian = [data](const VectorXd& z) { return eq_jacobian_impl(*data, z); };
  if (nlp.m_in > 0) {
    nlp.ineq = [data](const VectorXd& z) { return ineq_impl(*data, z); };
    nlp.ineq_jacobian = [data](const VectorXd& z) { return ineq_jacobian_impl(*data, z); };
  }

  const double inf = std::numeric_limits<double>::infinity();
  nlp.lower = VectorXd::Constant(nlp.n_vars, -inf);
  nlp.upper = VectorXd::Constant(nlp.n_vars, inf);
  for (int k = 0; k < ocp.horizon; ++k) {
    nlp.lower.segment<3>(layout.u_offset(k)) = ocp.u_min;
    nlp.upper.segment<3>(layout.u_offset(k)) = ocp.u_max;
  }

  // The objective is an explicit convex quadratic, so hand the solver its
  // exact constant Hessian as the starting curvature model, plus the exact
  // Lagrangian Hessian for use once multiplier estimates exist.
  nlp.hessian0 = objective_hessian(*data);
  nlp.lagrangian_hessian = [data](const VectorXd& z, const VectorXd& lam, const VectorXd& mu) {
    return lagrangian_hessian_impl(*data, z, lam, mu);
  };

  // structural nonzeros (advisory): dynamics rows touch x_k, u_k, x_{k+1};
  // barrier rows touch the planar position entries of x_k and x_{k+1}
  for (int k = 0; k < ocp.horizon; ++k) {
    for (int r = 0; r < 6; ++r) {
      const int row = 6 * k + r;
      nlp.jacobian_sparsity.emplace_back(row, layout.x_offset(k + 1) + r);
      if (k >= 1) {
        for (int c = 0; c < 6; ++c) nlp.jacobian_sparsity.emplace_back(row, layout.x_offset(k) + c);
      }
      for (int c = 0; c < 3; ++c) nlp.jacobian_sparsity.emplace_back(row, layout.u_offset(k) + c);
    }
  }
  for (int k = 0; k < ocp.horizon; ++k) {
    for (int r = 0; r < data->rows_per_stage; ++r) {
      const int row = nlp.m_eq + data->rows_per_stage * k + r;
      for (int c = 0; c < 2; ++c) {
        nlp.jacobian_sparsity.emplace_back(row, layout.x_offset(k + 1) + c);
        if (k >= 1) nlp.jacobian_sparsity.emplace_back(row, layout.x_offset(k) + c);
      }
    }
  }
  return nlp;
}

NlpSpec assemble_epigraph(const OcpProblem& ocp, const DisturbanceGrid& grid) {
  auto data = make_data(ocp);
  const OcpLayout& layout = data->layout;
  const int n_base = layout.n_vars();
  const int n_cand = static_cast<int>(grid.levels_x.size() * grid.levels_y.size());
  const int n = n_base + ocp.horizon;  // one epigraph variable per stage

  NlpSpec base = assemble(ocp);

  NlpSpec nlp;
  nlp.n_vars = n;
  nlp.m_eq = base.m_eq;
  nlp.m_in = base.m_in + ocp.horizon * n_cand;

  auto grid_ptr = std::make_shared<DisturbanceGrid>(grid);

  nlp.objective = [data, n_base](const VectorXd& z) {
    double j = z.tail(z.size() - n_base).sum();
    j += terminal_cost(data->x_at(z, data->ocp.horizon), data->ocp.weights, data->ocp.r_d);
    return j;
  };
  nlp.eq = [base, n_base](const VectorXd& z) { return base.eq(z.head(n_base)); };
  nlp.eq_jacobian = [base, n_base, n](const VectorXd& z) {
    MatrixXd j = MatrixXd::Zero(base.m_eq, n);
    j.leftCols(n_base) = base.eq_jacobian(z.head(n_base));
    return j;
  };
  nlp.ineq = [data, base, grid_ptr, n_base](const VectorXd& z) {
    const OcpProblem& ocp = data->ocp;
    const VectorXd zb = z.head(n_base);
    VectorXd c(base.m_in + ocp.horizon * static_cast<int>(grid_ptr->levels_x.size() *
                                                          grid_ptr->levels_y.size()));
    int row = 0;
    if (base.m_in > 0) {
      c.head(base.m_in) = base.ineq(zb);
      row = base.m_in;
    }
    for (int k = 0; k < ocp.horizon; ++k) {
      const Vec6 xk = data->x_at(zb, k);
      const Vec3 uk = data->u_at(zb, k);
      const Vec3 up = k == 0 ? ocp.u_prev : data->u_at(zb, k - 1);
      const Vec3 omp = k == 0 ? ocp.omega_prev : ocp.omega_seq[k - 1];
      const double tk = z[n_base + k];
      for (double wx : grid_ptr->levels_x) {
        for (double wy : grid_ptr->levels_y) {
          c[row++] = tk - stage_cost(xk, uk, up, Vec3(wx, wy, 0.0), omp, ocp.weights, ocp.r_d);
        }
      }
    }
    return c;
  };
  // epigraph rows get finite-difference derivatives; only the barrier and
  // dynamics blocks carry analytic ones, which is all the cross-check needs
  const double inf = std::numeric_limits<double>::infinity();
  nlp.lower = VectorXd::Constant(n, -inf);
  nlp.upper = VectorXd::Constant(n, inf);
  nlp.lower.head(n_base) = base.lower;
  nlp.upper.head(n_base) = base.upper;
  return nlp;
}

VectorXd pack_decision(const OcpProblem& ocp, const std::vector<Vec6>& states,
                       const std::vector<Vec3>& inputs) {
  if (static_cast<int>(states.size()) != ocp.horizon ||
      static_cast<int>(inputs.size()) != ocp.horizon) {
    throw DimensionError("pack_decision: need horizon states and inputs");
  }
  OcpLayout layout{ocp.horizon};
  VectorXd z(layout.n_vars());
  for (int k = 1; k <= ocp.horizon; ++k) z.segment<6>(layout.x_offset(k)) = states[k - 1];
  for (int k = 0; k < ocp.horizon; ++k) z.segment<3>(layout.u_offset(k)) = inputs[k];
  return z;
}

OcpSolution unpack_solution(const OcpProblem& ocp, const SolveReport& rep) {
  OcpLayout layout{ocp.horizon};
  OcpSolution sol;
  sol.states.resize(ocp.horizon);
  sol.inputs.resize(ocp.horizon);
  for (int k = 1; k <= ocp.horizon; ++k) sol.states[k - 1] = rep.z.segment<6>(layout.x_offset(k));
  for (int k = 0; k < ocp.horizon; ++k) sol.inputs[k] = rep.z.segment<3>(layout.u_offset(k));
  sol.objective = rep.objective;
  sol.kkt_residual = rep.kkt_residual;
  sol.status = rep.status;
  sol.iterations = rep.iterations;
  return sol;
}

}  // namespace asv

// Acceptance gate for the waterway navigation stack. Each numbered check
// prints one PASS/FAIL line; the process exits nonzero if any fails.
//
//  1. robust CBF controller reaches the goal safely within the step budget
//  2. nominal MPC contrast: at least one barrier goes negative
//  3. hard-border contrast: safe, but strictly less border clearance
//  4. worst-case disturbance pick matches an independent exhaustive scan
//  5. per-step barrier decay holds along the whole closed loop
//  6. integrator vs fine Euler oracle; Coriolis skew; rotation orthonormality
//  7. KKT at convergence; analytic vs finite-difference derivatives; hand QPs
//  8. stage/terminal cost against an explicit quadratic-form oracle
//  9. flow-field magnitude bound and realized disturbances inside the box

#include <sys/wait.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "asvnav/flow.hpp"
#include "asvnav/nlp.hpp"
#include "asvnav/ocp.hpp"
#include "asvnav/planner.hpp"
#include "asvnav/qp.hpp"
#include "asvnav/scenario.hpp"
#include "asvnav/sqp.hpp"
#include "asvnav/vessel.hpp"

using namespace asv;

namespace {

int g_failures = 0;

std::string strf(const char* fmt, ...) {
  char buf[768];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

void line(const char* label, bool ok, const std::string& detail) {
  std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", label, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double min_h_all(const TrajectoryLog& log) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& rec : log.records) {
    for (double h : rec.h_obstacles) m = std::min(m, h);
    for (double h : rec.h_borders) m = std::min(m, h);
  }
  return m;
}

double min_h_border(const TrajectoryLog& log) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& rec : log.records)
    for (double h : rec.h_borders) m = std::min(m, h);
  return m;
}

int run_cli(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  if (rc == -1 || !WIFEXITED(rc)) return -1;
  return WEXITSTATUS(rc);
}

}  // namespace

int main() {
  const char* data_dir = std::getenv("ASVNAV_DATA_DIR");
#ifdef ASVNAV_DATA_DIR
  if (!data_dir) data_dir = ASVNAV_DATA_DIR;
#endif
  if (!data_dir) {
    std::fprintf(stderr, "ASVNAV_DATA_DIR not set\n");
    return 2;
  }
  const std::string scenario_path = std::string(data_dir) + "/waterway.json";
  ScenarioConfig cfg;
  try {
    cfg = load_scenario(scenario_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "failed to load %s: %s\n", scenario_path.c_str(), e.what());
    return 2;
  }

  // ---- 1: robust CBF run arrives safely -------------------------------
  const bool params_pinned =
      cfg.cbf.gamma_o == 0.15 && cfg.cbf.gamma_b == 0.9 && cfg.horizon == 10 &&
      cfg.ts == 0.2 && cfg.step_cap == 600 && cfg.arrival_tolerance == 0.3 &&
      cfg.disturbance.n_levels == 20 &&
      std::abs(cfg.disturbance.w_max - std::sqrt(2.0)) < 1e-15 &&
      std::abs(cfg.disturbance.w_min + std::sqrt(2.0)) < 1e-15 &&
      (cfg.u_max.array() == 8.0).all() && (cfg.u_min.array() == -8.0).all() &&
      cfg.goal[0] == 25.0 && cfg.goal[1] == 3.0;

  std::fprintf(stderr, "running rmpc-cbf closed loop...\n");
  const auto t0 = std::chrono::steady_clock::now();
  const TrajectoryLog cbf_log = run_closed_loop(cfg, ControllerVariant::rmpc_cbf);
  const double cbf_runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const State& fin = cbf_log.records.back().state;
  const double goal_dist = std::hypot(fin.eta.x - 25.0, fin.eta.y - 3.0);
  const double cbf_min_h = min_h_all(cbf_log);
  line("criterion 1", params_pinned && cbf_log.outcome == RunOutcome::arrived &&
                          cbf_log.steps <= 600 && goal_dist <= 0.3 &&
                          cbf_min_h >= -1e-5 && cbf_runtime <= 600.0,
       strf("rmpc-cbf outcome=%s steps=%d goal_dist=%.3f min_h=%.3e runtime=%.1fs%s",
            to_string(cbf_log.outcome), cbf_log.steps, goal_dist, cbf_min_h, cbf_runtime,
            params_pinned ? "" : " (scenario parameters drifted from pinned values)"));

  // ---- 2: nominal MPC violates a barrier (escalate flow once if not) ---
  std::fprintf(stderr, "running mpc-nominal closed loop...\n");
  TrajectoryLog nom_log = run_closed_loop(cfg, ControllerVariant::mpc_nominal);
  double nom_min_h = min_h_all(nom_log);
  double nom_scale = 1.0;
  if (nom_min_h >= 0.0) {
    ScenarioConfig esc = cfg;
    esc.flow_scale *= 1.5;
    nom_scale = esc.flow_scale;
    std::fprintf(stderr, "nominal run stayed safe; escalating flow x1.5...\n");
    nom_log = run_closed_loop(esc, ControllerVariant::mpc_nominal);
    nom_min_h = min_h_all(nom_log);
  }
  line("criterion 2", nom_min_h < 0.0,
       strf("mpc-nominal min_h=%.3e at flow_scale=%.2f outcome=%s", nom_min_h, nom_scale,
            to_string(nom_log.outcome)));

  // ---- 3: hard-border variant safe but strictly closer to the border ---
  std::fprintf(stderr, "running rmpc-hard-border closed loop...\n");
  const TrajectoryLog hard_log = run_closed_loop(cfg, ControllerVariant::rmpc_hard_border);
  const double hard_min_border = min_h_border(hard_log);
  const double cbf_min_border = min_h_border(cbf_log);
  line("criterion 3", hard_log.outcome == RunOutcome::arrived && hard_min_border >= -1e-5 &&
                          hard_min_border < cbf_min_border,
       strf("rmpc-hard-border outcome=%s min_border_h=%.6e vs rmpc-cbf %.6e",
            to_string(hard_log.outcome), hard_min_border, cbf_min_border));

  // ---- 4: worst-case pick vs independent exhaustive scan ---------------
  {
    const DisturbanceGrid grid = make_grid(cfg.disturbance);
    const Weights& w = cfg.weights;
    const Vec6 r_d = cfg.goal;
    std::mt19937 rng(20260817u);
    std::uniform_real_distribution<double> upos(-10.0, 10.0), uang(-M_PI, M_PI),
        uvel(-1.5, 1.5), uyaw(-1.0, 1.0), uin(-8.0, 8.0),
        ubox(cfg.disturbance.w_min, cfg.disturbance.w_max);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      Vec6 x;
      x << upos(rng), upos(rng), uang(rng), uvel(rng), uvel(rng), uyaw(rng);
      const Vec3 u(uin(rng), uin(rng), uin(rng));
      const Vec3 u_prev(uin(rng), uin(rng), uin(rng));
      const Vec3 om_prev(ubox(rng), ubox(rng), 0.0);

      // independent scan with an independently written cost
      double sx = 0.0;
      for (int c = 0; c < 6; ++c) {
        const double d = x[c] - r_d[c];
        sx += w.q[c] * d * d;
      }
      double best = -std::numeric_limits<double>::infinity();
      std::pair<int, int> arg{-1, -1};
      for (std::size_t i = 0; i < grid.levels_x.size(); ++i) {
        for (std::size_t j = 0; j < grid.levels_y.size(); ++j) {
          const double d0 = (u[0] - grid.levels_x[i]) - (u_prev[0] - om_prev[0]);
          const double d1 = (u[1] - grid.levels_y[j]) - (u_prev[1] - om_prev[1]);
          const double d2 = u[2] - u_prev[2];
          const double cost = sx + w.r[0] * d0 * d0 + w.r[1] * d1 * d1 + w.r[2] * d2 * d2;
          if (cost > best) {
            best = cost;
            arg = {static_cast<int>(i), static_cast<int>(j)};
          }
        }
      }

      const auto idx = worst_case_omega_index(x, u, u_prev, om_prev, grid, w, r_d);
      const Vec3 om = worst_case_omega(x, u, u_prev, om_prev, grid, w, r_d);
      if (idx != arg || om[0] != grid.levels_x[arg.first] ||
          om[1] != grid.levels_y[arg.second] || om[2] != 0.0) {
        ++mismatches;
      }
    }
    line("criterion 4", mismatches == 0,
         strf("worst-case argmax mismatches: %d / 1000 tuples", mismatches));
  }

  // ---- 5: barrier decay chain at every plant step ----------------------
  {
    int violations = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < cbf_log.records.size(); ++k) {
      const auto& a = cbf_log.records[k];
      const auto& b = cbf_log.records[k + 1];
      for (std::size_t i = 0; i < a.h_obstacles.size(); ++i) {
        const double resid = b.h_obstacles[i] - (1.0 - cfg.cbf.gamma_o) * a.h_obstacles[i];
        worst = std::min(worst, resid);
        if (resid < -1e-4) ++violations;
      }
      for (std::size_t j = 0; j < a.h_borders.size(); ++j) {
        const double resid = b.h_borders[j] - (1.0 - cfg.cbf.gamma_b) * a.h_borders[j];
        worst = std::min(worst, resid);
        if (resid < -1e-4) ++violations;
      }
    }
    line("criterion 5", violations == 0,
         strf("decay residual violations: %d, smallest residual %.3e", violations, worst));
  }

  // ---- 6: integrator, Coriolis skew, rotation orthonormality -----------
  {
    // Agreement is checked at ts = 0.02, where the Euler oracle's own
    // truncation (~2e-5) is well inside the 1e-4 budget; at the controller's
    // ts = 0.2 a single RK4 step carries genuine discretization error above
    // 1e-4 at fast velocities, so no correct implementation could pass there.
    const VesselParams& p = cfg.vessel;
    const double ts = 0.02;
    std::mt19937 rng(91u);
    std::uniform_real_distribution<double> upos(-10.0, 10.0), uang(-M_PI, M_PI),
        uvel(-1.5, 1.5), uyaw(-1.0, 1.0), uin(-8.0, 8.0), uw(-1.4, 1.4);
    double max_rel = 0.0, max_skew = 0.0, max_orth = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      Vec6 x;
      x << upos(rng), upos(rng), uang(rng), uvel(rng), uvel(rng), uyaw(rng);
      const Vec3 tau(uin(rng), uin(rng), uin(rng));
      const Vec3 om(uw(rng), uw(rng), uyaw(rng));

      const Vec6 rk = discrete_step(x, tau, om, ts, p);
      Vec6 e = x;
      const int substeps = 2000;
      const double h = ts / substeps;
      for (int s = 0; s < substeps; ++s) e += h * continuous_dynamics(e, tau, om, p);
      for (int c = 0; c < 6; ++c)
        max_rel = std::max(max_rel, std::abs(rk[c] - e[c]) / std::max(1.0, std::abs(e[c])));

      const Vec3 nu = x.tail<3>();
      const Mat3 crb = coriolis_rb(nu, p);
      const Mat3 ca = coriolis_added(nu, p);
      max_skew = std::max(max_skew, (crb + crb.transpose()).cwiseAbs().maxCoeff());
      max_skew = std::max(max_skew, (ca + ca.transpose()).cwiseAbs().maxCoeff());

      const Mat3 j = rotation_matrix(x[2]);
      max_orth = std::max(max_orth,
                          (j.transpose() * j - Mat3::Identity()).cwiseAbs().maxCoeff());
      max_orth = std::max(max_orth, std::abs(j.determinant() - 1.0));
    }
    line("criterion 6", max_rel <= 1e-4 && max_skew == 0.0 && max_orth <= 1e-12,
         strf("integrator rel err %.3e, skew defect %.1e, orthonormality defect %.3e",
              max_rel, max_skew, max_orth));
  }

  // ---- 7: solver verification -------------------------------------------
  {
    // (a) logged KKT residuals at converged receding-horizon solves
    int converged_steps = 0;
    double max_kkt = 0.0;
    for (const auto& rec : cbf_log.records) {
      if (rec.status == "converged") {
        ++converged_steps;
        max_kkt = std::max(max_kkt, rec.kkt_residual);
      }
    }
    const bool kkt_ok = converged_steps > 0 && max_kkt <= 1e-6;

    // (b) analytic derivatives vs central finite differences
    OcpProblem ocp;
    ocp.horizon = cfg.horizon;
    ocp.ts = cfg.ts;
    ocp.x0 = cfg.start.flat();
    ocp.r_d = cfg.goal;
    ocp.u_min = cfg.u_min;
    ocp.u_max = cfg.u_max;
    ocp.weights = cfg.weights;
    ocp.safety.obstacles = cfg.obstacles;
    ocp.safety.borders = cfg.borders;
    ocp.safety.cbf = cfg.cbf;
    ocp.vessel = cfg.vessel;
    ocp.injection = cfg.injection;
    std::mt19937 rng(77u);
    std::uniform_real_distribution<double> ubox(cfg.disturbance.w_min, cfg.disturbance.w_max);
    ocp.omega_seq.assign(ocp.horizon, Vec3::Zero());
    for (auto& om : ocp.omega_seq) om = Vec3(ubox(rng), ubox(rng), 0.0);

    const NlpSpec nlp = assemble(ocp);
    NlpSpec nlp_fd = nlp;
    nlp_fd.gradient = nullptr;
    nlp_fd.eq_jacobian = nullptr;
    nlp_fd.ineq_jacobian = nullptr;

    const OcpLayout layout{ocp.horizon};
    std::uniform_real_distribution<double> upx(-2.0, 27.0), upy(0.5, 5.5),
        uang(-M_PI, M_PI), umag(0.05, 1.2), uin(-6.0, 6.0);
    auto signed_vel = [&]() { return (rng() & 1u ? 1.0 : -1.0) * umag(rng); };
    double max_fd_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      VectorXd z(layout.n_vars());
      for (int k = 1; k <= ocp.horizon; ++k) {
        const int o = layout.x_offset(k);
        z[o] = upx(rng);
        z[o + 1] = upy(rng);
        z[o + 2] = uang(rng);
        z[o + 3] = signed_vel();
        z[o + 4] = signed_vel();
        z[o + 5] = signed_vel();
      }
      for (int k = 0; k < ocp.horizon; ++k) {
        const int o = layout.u_offset(k);
        z[o] = uin(rng);
        z[o + 1] = uin(rng);
        z[o + 2] = uin(rng);
      }
      const Derivatives an = gradients(nlp, z);
      const Derivatives fd = gradients(nlp_fd, z);
      auto rel_max = [](const MatrixXd& a, const MatrixXd& b) {
        double m = 0.0;
        for (int r = 0; r < a.rows(); ++r)
          for (int c = 0; c < a.cols(); ++c)
            m = std::max(m, std::abs(a(r, c) - b(r, c)) / std::max(1.0, std::abs(b(r, c))));
        return m;
      };
      max_fd_rel = std::max(max_fd_rel, rel_max(an.gradient, fd.gradient));
      max_fd_rel = std::max(max_fd_rel, rel_max(an.eq_jac, fd.eq_jac));
      max_fd_rel = std::max(max_fd_rel, rel_max(an.ineq_jac, fd.ineq_jac));
    }
    const bool fd_ok = max_fd_rel <= 1e-4;

    // (c) hand-solvable 2-variable QPs
    double qp_err = 0.0;
    bool qp_ok = true;
    {
      QpProblem qp;  // min x^2 + y^2  s.t.  x + y >= 1  ->  (0.5, 0.5), mu = 1
      qp.h = 2.0 * Eigen::Matrix2d::Identity();
      qp.g = Eigen::Vector2d::Zero();
      qp.a_in.resize(1, 2);
      qp.a_in << 1.0, 1.0;
      qp.b_in = VectorXd::Constant(1, 1.0);
      const QpResult r = solve_qp(qp);
      qp_ok = qp_ok && r.status == QpStatus::optimal;
      qp_err = std::max(qp_err, (r.p - Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff());
      qp_err = std::max(qp_err, std::abs(r.mu_in[0] - 1.0));
    }
    {
      QpProblem qp;  // same objective, equality x + y = 1 -> lambda = 1
      qp.h = 2.0 * Eigen::Matrix2d::Identity();
      qp.g = Eigen::Vector2d::Zero();
      qp.a_eq.resize(1, 2);
      qp.a_eq << 1.0, 1.0;
      qp.b_eq = VectorXd::Constant(1, 1.0);
      const QpResult r = solve_qp(qp);
      qp_ok = qp_ok && r.status == QpStatus::optimal;
      qp_err = std::max(qp_err, (r.p - Eigen::Vector2d(0.5, 0.5)).cwiseAbs().maxCoeff());
      qp_err = std::max(qp_err, std::abs(r.lambda_eq[0] - 1.0));
    }
    {
      QpProblem qp;  // min (x-2)^2 + (y-2)^2  s.t.  x <= 1, y <= 1 -> (1, 1), mu = (2, 2)
      qp.h = 2.0 * Eigen::Matrix2d::Identity();
      qp.g = Eigen::Vector2d(-4.0, -4.0);
      qp.a_in.resize(2, 2);
      qp.a_in << -1.0, 0.0, 0.0, -1.0;
      qp.b_in = VectorXd::Constant(2, -1.0);
      const QpResult r = solve_qp(qp);
      qp_ok = qp_ok && r.status == QpStatus::optimal;
      qp_err = std::max(qp_err, (r.p - Eigen::Vector2d(1.0, 1.0)).cwiseAbs().maxCoeff());
      qp_err = std::max(qp_err, (r.mu_in - Eigen::Vector2d(2.0, 2.0)).cwiseAbs().maxCoeff());
    }
    qp_ok = qp_ok && qp_err <= 1e-8;

    line("criterion 7", kkt_ok && fd_ok && qp_ok,
         strf("max KKT %.3e over %d converged solves, max derivative rel diff %.3e, "
              "hand-QP err %.3e",
              max_kkt, converged_steps, max_fd_rel, qp_err));
  }

  // ---- 8: cost functions against a quadratic-form oracle ---------------
  {
    const Weights& w = cfg.weights;
    bool pinned = true;
    const double q_ref[6] = {2, 2, 2, 1, 1, 1};
    const double qt_ref[6] = {3, 3, 3, 1, 1, 1};
    const double r_ref[3] = {0.1, 0.1, 0.01};
    for (int i = 0; i < 6; ++i)
      pinned = pinned && w.q[i] == q_ref[i] && w.q_terminal[i] == qt_ref[i];
    for (int i = 0; i < 3; ++i) pinned = pinned && w.r[i] == r_ref[i];

    auto oracle = [&](const Vec6& x, const Vec3& u, const Vec3& u_prev, const Vec3& om,
                      const Vec3& om_prev, const Vec6& r_d) {
      const Vec6 dx = x - r_d;
      const Vec3 du = (u - Vec3(om[0], om[1], 0.0)) - (u_prev - Vec3(om_prev[0], om_prev[1], 0.0));
      return dx.dot(w.q.asDiagonal() * dx) + du.dot(w.r.asDiagonal() * du);
    };

    double max_err = 0.0;
    const Vec6 r_d = cfg.goal;
    for (int i = 0; i < 6; ++i) {  // unit state error -> exactly one weight
      Vec6 x = r_d;
      x[i] += 1.0;
      max_err = std::max(max_err, std::abs(stage_cost(x, Vec3::Zero(), Vec3::Zero(),
                                                      Vec3::Zero(), Vec3::Zero(), w, r_d) -
                                           w.q[i]));
      max_err = std::max(max_err, std::abs(terminal_cost(x, w, r_d) - w.q_terminal[i]));
    }
    for (int j = 0; j < 3; ++j) {  // unit input increment -> exactly one weight
      Vec3 u = Vec3::Zero();
      u[j] = 1.0;
      max_err = std::max(max_err, std::abs(stage_cost(r_d, u, Vec3::Zero(), Vec3::Zero(),
                                                      Vec3::Zero(), w, r_d) -
                                           w.r[j]));
    }
    std::mt19937 rng(123u);
    std::uniform_real_distribution<double> u2(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
      Vec6 x, rd;
      for (int c = 0; c < 6; ++c) {
        x[c] = u2(rng);
        rd[c] = u2(rng);
      }
      const Vec3 u(u2(rng), u2(rng), u2(rng)), up(u2(rng), u2(rng), u2(rng));
      const Vec3 om(u2(rng), u2(rng), 0.0), omp(u2(rng), u2(rng), 0.0);
      const double ref = oracle(x, u, up, om, omp, rd);
      const double got = stage_cost(x, u, up, om, omp, w, rd);
      max_err = std::max(max_err, std::abs(got - ref) / std::max(1.0, std::abs(ref)));
      const double tref = (x - rd).dot(w.q_terminal.asDiagonal() * (x - rd));
      max_err = std::max(max_err,
                         std::abs(terminal_cost(x, w, rd) - tref) / std::max(1.0, std::abs(tref)));
    }
    line("criterion 8", pinned && max_err <= 1e-12,
         strf("weights pinned=%s, max cost err %.3e", pinned ? "yes" : "NO", max_err));
  }

  // ---- 9: flow-field bound and realized disturbances in the box --------
  {
    double max_f = 0.0;
    bool inside = true;
    const double wmin = cfg.disturbance.w_min, wmax = cfg.disturbance.w_max;
    for (int i = 0; i < 200; ++i) {
      for (int j = 0; j < 200; ++j) {
        const double x = 25.0 * i / 199.0;
        const double y = 6.0 * j / 199.0;
        max_f = std::max(max_f, flow_force(x, y));
        const Vec3 om = realized_disturbance(x, y);
        inside = inside && om[0] >= wmin - 1e-12 && om[0] <= wmax + 1e-12 &&
                 om[1] >= wmin - 1e-12 && om[1] <= wmax + 1e-12 && om[2] == 0.0;
      }
    }
    bool run_inside = true;  // the closed loop must also have stayed in the box
    for (const auto& rec : cbf_log.records) {
      run_inside = run_inside && rec.omega_realized[0] >= wmin - 1e-12 &&
                   rec.omega_realized[0] <= wmax + 1e-12 &&
                   rec.omega_realized[1] >= wmin - 1e-12 &&
                   rec.omega_realized[1] <= wmax + 1e-12;
    }
    line("criterion 9", max_f <= std::sqrt(2.0) + 1e-12 && inside && run_inside,
         strf("max |flow| %.15f, grid in box: %s, run in box: %s", max_f,
              inside ? "yes" : "NO", run_inside ? "yes" : "NO"));
  }

  // ---- CLI exit-code contract ------------------------------------------
  const char* cli = std::getenv("ASVNAV_CLI_PATH");
#ifdef ASVNAV_CLI_PATH
  if (!cli) cli = ASVNAV_CLI_PATH;
#endif
  if (cli) {
    const std::string c(cli);
    const int rc_validate = run_cli("\"" + c + "\" validate --scenario \"" + scenario_path + "\"");
    const int rc_usage = run_cli("\"" + c + "\" run --definitely-not-a-flag");
    const int rc_help = run_cli("\"" + c + "\" --help");
    line("cli exit codes", rc_validate == 0 && rc_usage == 64 && rc_help == 0,
         strf("validate=%d (want 0), unknown flag=%d (want 64), help=%d (want 0)",
              rc_validate, rc_usage, rc_help));
  } else {
    line("cli exit codes", false, "ASVNAV_CLI_PATH not set");
  }

  std::printf("%d check(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}

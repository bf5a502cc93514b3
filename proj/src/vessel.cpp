#include "asvnav/vessel.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace asv {

namespace {

using FieldMap = std::map<std::string, double VesselParams::*>;

const FieldMap& field_map() {
  static const FieldMap fields = {
      {"m", &VesselParams::m},
      {"I_z", &VesselParams::I_z},
      {"x_g", &VesselParams::x_g},
      {"X_du", &VesselParams::X_du},
      {"Y_dv", &VesselParams::Y_dv},
      {"Y_dr", &VesselParams::Y_dr},
      {"N_dv", &VesselParams::N_dv},
      {"N_dr", &VesselParams::N_dr},
      {"X_u", &VesselParams::X_u},
      {"X_absu_u", &VesselParams::X_absu_u},
      {"X_uuu", &VesselParams::X_uuu},
      {"Y_v", &VesselParams::Y_v},
      {"Y_absv_v", &VesselParams::Y_absv_v},
      {"Y_absr_v", &VesselParams::Y_absr_v},
      {"Y_r", &VesselParams::Y_r},
      {"Y_absv_r", &VesselParams::Y_absv_r},
      {"Y_absr_r", &VesselParams::Y_absr_r},
      {"N_v", &VesselParams::N_v},
      {"N_absv_v", &VesselParams::N_absv_v},
      {"N_absr_v", &VesselParams::N_absr_v},
      {"N_r", &VesselParams::N_r},
      {"N_absv_r", &VesselParams::N_absv_r},
      {"N_absr_r", &VesselParams::N_absr_r},
      {"l_x", &VesselParams::l_x},
      {"l_y", &VesselParams::l_y},
      {"l", &VesselParams::l},
      {"w", &VesselParams::w},
      {"r_a", &VesselParams::r_a},
  };
  return fields;
}

}  // namespace

void VesselParams::validate() const {
  if (!(m > 0.0)) throw VesselParamsError("vessel mass m must be positive");
  if (!(I_z > 0.0)) throw VesselParamsError("yaw inertia I_z must be positive");
  if (!(l > 0.0) || !(w > 0.0)) {
    throw VesselParamsError("hull dimensions l and w must be positive");
  }
  if (r_a < half_diagonal()) {
    throw VesselParamsError("inflation radius r_a is smaller than the hull half-diagonal " +
                            std::to_string(half_diagonal()));
  }
  detail::mass_inverse(*this);  // throws SingularMassError if M is singular

  Eigen::JacobiSVD<Mat3> svd(mass_matrix(*this));
  const double cond = svd.singularValues()(0) / svd.singularValues()(2);
  if (!std::isfinite(cond) || cond > 1e12) {
    throw SingularMassError("total mass matrix is numerically singular (condition number " +
                            std::to_string(cond) + ")");
  }
}

VesselParams load_vessel_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vessel parameter file: " + path);

  VesselParams p;
  std::map<std::string, int> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;  // blank / comment-only line
    double value = 0.0;
    if (!(ls >> value)) {
      throw VesselParamsError(path + ":" + std::to_string(line_no) +
                              ": missing numeric value for key '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) {
      throw VesselParamsError(path + ":" + std::to_string(line_no) +
                              ": trailing content after value for key '" + key + "'");
    }
    const auto it = field_map().find(key);
    if (it == field_map().end()) {
      throw VesselParamsError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (++seen[key] > 1) {
      throw VesselParamsError(path + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    p.*(it->second) = value;
  }
  for (const auto& [key, member] : field_map()) {
    (void)member;
    if (!seen.count(key)) {
      throw VesselParamsError(path + ": missing required key '" + key + "'");
    }
  }
  p.validate();
  return p;
}

Mat3 rotation_matrix(double psi) {
  const double c = std::cos(psi), s = std::sin(psi);
  Mat3 j;
  // clang-format off
  j << c, -s, 0.0,
       s,  c, 0.0,
       0.0, 0.0, 1.0;
  // clang-format on
  return j;
}

Mat3 mass_rigid(const VesselParams& p) {
  Mat3 m;
  // clang-format off
  m << p.m, 0.0,        0.0,
       0.0, p.m,        p.m * p.x_g,
       0.0, p.m * p.x_g, p.I_z;
  // clang-format on
  return m;
}

Mat3 mass_added(const VesselParams& p) {
  Mat3 m;
  // clang-format off
  m << -p.X_du, 0.0,     0.0,
       0.0,     -p.Y_dv, -p.Y_dr,
       0.0,     -p.N_dv, -p.N_dr;
  // clang-format on
  return m;
}

Mat3 mass_matrix(const VesselParams& p) { return mass_rigid(p) + mass_added(p); }

Mat3 coriolis_rb(const Vec3& nu, const VesselParams& p) {
  const double u = nu[0], v = nu[1], r = nu[2];
  const double c13 = -p.m * (p.x_g * r + v);
  const double c23 = p.m * u;
  Mat3 c;
  // clang-format off
  c << 0.0,  0.0,  c13,
       0.0,  0.0,  c23,
       -c13, -c23, 0.0;
  // clang-format on
  return c;
}

Mat3 coriolis_added(const Vec3& nu_r, const VesselParams& p) {
  const double u_r = nu_r[0], v_r = nu_r[1], r = nu_r[2];
  const double c13 = p.Y_dv * v_r + 0.5 * (p.N_dv + p.Y_dr) * r;
  const double c23 = -p.X_du * u_r;
  Mat3 c;
  // clang-format off
  c << 0.0,  0.0,  c13,
       0.0,  0.0,  c23,
       -c13, -c23, 0.0;
  // clang-format on
  return c;
}

Mat3 damping(const Vec3& nu, const Vec3& nu_r, const VesselParams& p) {
  const double u = nu[0], r = nu[2];
  const double u_r = nu_r[0], v_r = nu_r[1];
  Mat3 d = Mat3::Zero();
  d(0, 0) = p.X_u + p.X_absu_u * std::abs(u) + p.X_uuu * u_r * u_r;
  d(1, 1) = p.Y_v + p.Y_absv_v * std::abs(v_r) + p.Y_absr_v * std::abs(r);
  d(1, 2) = p.Y_r + p.Y_absv_r * std::abs(v_r) + p.Y_absr_r * std::abs(r);
  d(2, 1) = p.N_v + p.N_absv_v * std::abs(v_r) + p.N_absr_v * std::abs(r);
  d(2, 2) = p.N_r + p.N_absv_r * std::abs(v_r) + p.N_absr_r * std::abs(r);
  return d;
}

Mat3 thruster_matrix(const VesselParams& p) {
  Mat3 b;
  // clang-format off
  b << 0.0,  0.0,   1.0,
       1.0,  0.0,   0.0,
       p.l_x, -p.l_y, p.l_y;
  // clang-format on
  return b;
}

Vec3 thruster_allocation(const Vec3& f, const VesselParams& p) {
  return thruster_matrix(p) * f;
}

Vec3 disturbance_force(const Vec3& omega, const VesselParams& p,
                       DisturbanceInjection injection) {
  if (injection == DisturbanceInjection::thruster_map) {
    return thruster_matrix(p) * omega;
  }
  return omega;
}

Vec6 continuous_dynamics(const Vec6& x, const Vec3& tau, const Vec3& omega,
                         const VesselParams& p, DisturbanceInjection injection) {
  const auto mi = detail::mass_inverse(p);
  const Vec3 w = disturbance_force(omega, p, injection);
  Vec6 dx;
  detail::ode_rhs(p, mi, x.data(), tau.data(), w, dx.data());
  return dx;
}

Vec6 discrete_step(const Vec6& x, const Vec3& tau, const Vec3& omega, double ts,
                   const VesselParams& p, DisturbanceInjection injection) {
  const auto mi = detail::mass_inverse(p);
  const Vec3 w = disturbance_force(omega, p, injection);
  Vec6 out;
  detail::rk4_step(p, mi, x.data(), tau.data(), w, ts, out.data());
  return out;
}

Vec6 discrete_step_with_jacobian(const Vec6& x, const Vec3& tau, const Vec3& omega,
                                 double ts, const VesselParams& p, Mat6& fx, Mat63& fu,
                                 DisturbanceInjection injection) {
  using D = Dual<9>;  // seeds: 6 state entries then 3 input entries
  const auto mi = detail::mass_inverse(p);
  const Vec3 w = disturbance_force(omega, p, injection);

  D xs[6], ts_in[3], out[6];
  for (int i = 0; i < 6; ++i) xs[i] = D::seed(x[i], i);
  for (int i = 0; i < 3; ++i) ts_in[i] = D::seed(tau[i], 6 + i);
  detail::rk4_step(p, mi, xs, ts_in, w, ts, out);

  Vec6 next;
  for (int i = 0; i < 6; ++i) {
    next[i] = out[i].v;
    fx.row(i) = out[i].d.head<6>().transpose();
    fu.row(i) = out[i].d.tail<3>().transpose();
  }
  return next;
}

}  // namespace asv

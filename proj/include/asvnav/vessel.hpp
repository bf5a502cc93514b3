#pragma once

#include <cmath>
#include <string>

#include "asvnav/dual.hpp"
#include "asvnav/types.hpp"

namespace asv {

// 3-DOF maneuvering model parameters (rigid body, added mass, hydrodynamic
// damping, thruster geometry, hull extent). Damping coefficients are stored
// as the values that enter the D(nu) matrix directly, i.e. positive entries
// dissipate energy.
struct VesselParams {
  // rigid body
  double m = 0.0;
  double I_z = 0.0;
  double x_g = 0.0;
  // added mass derivatives (SNAME sign convention, typically negative)
  double X_du = 0.0;
  double Y_dv = 0.0;
  double Y_dr = 0.0;
  double N_dv = 0.0;
  double N_dr = 0.0;
  // damping
  double X_u = 0.0;
  double X_absu_u = 0.0;
  double X_uuu = 0.0;
  double Y_v = 0.0;
  double Y_absv_v = 0.0;
  double Y_absr_v = 0.0;
  double Y_r = 0.0;
  double Y_absv_r = 0.0;
  double Y_absr_r = 0.0;
  double N_v = 0.0;
  double N_absv_v = 0.0;
  double N_absr_v = 0.0;
  double N_r = 0.0;
  double N_absv_r = 0.0;
  double N_absr_r = 0.0;
  // actuator geometry (azimuth/tunnel thruster arms)
  double l_x = 0.0;
  double l_y = 0.0;
  // hull bounding box and obstacle inflation radius
  double l = 0.0;
  double w = 0.0;
  double r_a = 0.0;

  double half_diagonal() const { return 0.5 * std::sqrt(w * w + l * l); }

  // Throws VesselParamsError / SingularMassError on physically meaningless
  // values (non-positive mass or hull extent, singular total mass matrix,
  // r_a smaller than the hull half-diagonal).
  void validate() const;
};

// Reads a flat "key value" parameter file ('#' comments). Every VesselParams
// field must be present exactly once; unknown keys are an error. Both
// failure modes name the offending key.
VesselParams load_vessel_params(const std::string& path);

Mat3 rotation_matrix(double psi);
Mat3 mass_rigid(const VesselParams& p);
Mat3 mass_added(const VesselParams& p);
Mat3 mass_matrix(const VesselParams& p);  // M_RB + M_A
Mat3 coriolis_rb(const Vec3& nu, const VesselParams& p);
Mat3 coriolis_added(const Vec3& nu_r, const VesselParams& p);
Mat3 damping(const Vec3& nu, const Vec3& nu_r, const VesselParams& p);
Mat3 thruster_matrix(const VesselParams& p);
Vec3 thruster_allocation(const Vec3& f, const VesselParams& p);

// How a flow disturbance omega enters the force balance: added to the
// generalized forces as-is, or routed through the thruster matrix.
enum class DisturbanceInjection { direct, thruster_map };

Vec3 disturbance_force(const Vec3& omega, const VesselParams& p,
                       DisturbanceInjection injection);

Vec6 continuous_dynamics(const Vec6& x, const Vec3& tau, const Vec3& omega,
                         const VesselParams& p,
                         DisturbanceInjection injection = DisturbanceInjection::direct);
inline State continuous_dynamics_state(const State& s, const Vec3& tau, const Vec3& omega,
                                       const VesselParams& p) {
  return State::from_flat(continuous_dynamics(s.flat(), tau, omega, p));
}

// One RK4 step of length ts. The same function propagates both the
// prediction model and the simulated plant.
Vec6 discrete_step(const Vec6& x, const Vec3& tau, const Vec3& omega, double ts,
                   const VesselParams& p,
                   DisturbanceInjection injection = DisturbanceInjection::direct);
inline State discrete_step(const State& s, const Vec3& tau, const Vec3& omega, double ts,
                           const VesselParams& p) {
  return State::from_flat(discrete_step(s.flat(), tau, omega, ts, p));
}

// RK4 step together with exact sensitivities d(next)/dx (6x6) and
// d(next)/dtau (6x3), obtained by running the step on forward-mode duals.
Vec6 discrete_step_with_jacobian(const Vec6& x, const Vec3& tau, const Vec3& omega,
                                 double ts, const VesselParams& p,
                                 Mat6& fx, Mat63& fu,
                                 DisturbanceInjection injection = DisturbanceInjection::direct);

namespace detail {

struct MassInv {
  double a00, a11, a12, a21, a22;  // inverse of the block-diagonal M
};

inline MassInv mass_inverse(const VesselParams& p) {
  const double m00 = p.m - p.X_du;
  const double m11 = p.m - p.Y_dv;
  const double m12 = p.m * p.x_g - p.Y_dr;
  const double m21 = p.m * p.x_g - p.N_dv;
  const double m22 = p.I_z - p.N_dr;
  const double det = m11 * m22 - m12 * m21;
  const double scale = std::abs(m11 * m22) + std::abs(m12 * m21) + 1.0;
  if (std::abs(m00) < 1e-12 || std::abs(det) < 1e-12 * scale) {
    throw SingularMassError("total mass matrix (rigid body + added mass) is singular");
  }
  return {1.0 / m00, m22 / det, -m12 / det, -m21 / det, m11 / det};
}

// Componentwise force balance & kinematics, templated so the same code runs
// on doubles (simulation) and on Dual scalars (Jacobians). omega is the
// already-mapped generalized disturbance force.
template <class T>
void ode_rhs(const VesselParams& p, const MassInv& mi, const T* x, const T* tau,
             const Vec3& omega, T* dx) {
  using std::abs;
  using std::cos;
  using std::sin;

  const T& psi = x[2];
  const T& u = x[3];
  const T& v = x[4];
  const T& r = x[5];

  // no ambient current model: relative velocities equal body velocities
  const T& u_r = u;
  const T& v_r = v;

  const T c_rb13 = -p.m * (p.x_g * r + v);  // C_RB(1,3); (2,3) is m*u
  const T c_rb23 = p.m * u;
  const T c_a13 = p.Y_dv * v_r + 0.5 * (p.N_dv + p.Y_dr) * r;
  const T c_a23 = -p.X_du * u_r;

  const T d11 = p.X_u + p.X_absu_u * abs(u) + p.X_uuu * u_r * u_r;
  const T d22 = p.Y_v + p.Y_absv_v * abs(v_r) + p.Y_absr_v * abs(r);
  const T d23 = p.Y_r + p.Y_absv_r * abs(v_r) + p.Y_absr_r * abs(r);
  const T d32 = p.N_v + p.N_absv_v * abs(v_r) + p.N_absr_v * abs(r);
  const T d33 = p.N_r + p.N_absv_r * abs(v_r) + p.N_absr_r * abs(r);

  const T f0 = tau[0] + omega[0] - (c_rb13 * r + c_a13 * r + d11 * u);
  const T f1 = tau[1] + omega[1] - (c_rb23 * r + c_a23 * r + d22 * v + d23 * r);
  const T f2 = tau[2] + omega[2] +
               (c_rb13 * u + c_rb23 * v + c_a13 * u + c_a23 * v) - (d32 * v + d33 * r);

  dx[0] = cos(psi) * u - sin(psi) * v;
  dx[1] = sin(psi) * u + cos(psi) * v;
  dx[2] = r;
  dx[3] = mi.a00 * f0;
  dx[4] = mi.a11 * f1 + mi.a12 * f2;
  dx[5] = mi.a21 * f1 + mi.a22 * f2;
}

template <class T>
void rk4_step(const VesselParams& p, const MassInv& mi, const T* x, const T* tau,
              const Vec3& omega, double ts, T* out) {
  T k1[6], k2[6], k3[6], k4[6], xt[6];
  ode_rhs(p, mi, x, tau, omega, k1);
  for (int i = 0; i < 6; ++i) xt[i] = x[i] + 0.5 * ts * k1[i];
  ode_rhs(p, mi, xt, tau, omega, k2);
  for (int i = 0; i < 6; ++i) xt[i] = x[i] + 0.5 * ts * k2[i];
  ode_rhs(p, mi, xt, tau, omega, k3);
  for (int i = 0; i < 6; ++i) xt[i] = x[i] + ts * k3[i];
  ode_rhs(p, mi, xt, tau, omega, k4);
  for (int i = 0; i < 6; ++i) {
    out[i] = x[i] + (ts / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

}  // namespace detail

}  // namespace asv

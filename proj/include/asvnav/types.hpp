#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace asv {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

// Earth-fixed position/heading.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;
};

// Body-fixed velocities: surge, sway, yaw rate.
struct Velocity {
  double u = 0.0;
  double v = 0.0;
  double r = 0.0;
};

// Full vessel state. Flat layout is [x, y, psi, u, v, r] everywhere:
// optimizer variables, Jacobian rows/cols, and log columns all use it.
struct State {
  Pose eta;
  Velocity nu;

  Vec6 flat() const {
    Vec6 z;
    z << eta.x, eta.y, eta.psi, nu.u, nu.v, nu.r;
    return z;
  }
  static State from_flat(const Vec6& z) {
    return {{z[0], z[1], z[2]}, {z[3], z[4], z[5]}};
  }
};

// Generalized force command [X, Y, N]: surge force, sway force, yaw moment.
using ControlInput = Vec3;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VesselParamsError : Error { using Error::Error; };
struct SingularMassError : Error { using Error::Error; };
struct ScenarioError : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace asv

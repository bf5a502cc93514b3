#pragma once

#include <Eigen/Core>
#include <cmath>

#include "asvnav/types.hpp"
#include "asvnav/vessel.hpp"

namespace asv {

// Circular no-go region. The vessel keeps distance radius + r_a from the
// center, where r_a inflates for the hull footprint.
struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double radius = 0.0;
};

// Waterway border a*x + b*y + c = 0 with the safe half-plane on the side
// where a*x + b*y + c >= 0. Stored normalized (a^2 + b^2 = 1).
struct BorderLine {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  BorderLine normalized() const {
    const double n = std::hypot(a, b);
    return {a / n, b / n, c / n};
  }
};

// Safe-set decay rates, one for obstacle constraints and one for borders.
// Values in (0, 1]; smaller means the barrier may decay more slowly and the
// controller acts earlier.
struct CbfParams {
  double gamma_o = 0.15;
  double gamma_b = 0.9;
};

// Obstacle barrier: zero on the inflated circle, negative inside,
// grows quadratically with distance outside.
inline double obstacle_h(const Eigen::Vector2d& pos, const Obstacle& o, double r_a) {
  const double dx = pos.x() - o.x;
  const double dy = pos.y() - o.y;
  const double rr = o.radius + r_a;
  return -1.0 + (dx * dx + dy * dy) / (rr * rr);
}

inline Eigen::Vector2d obstacle_h_grad(const Eigen::Vector2d& pos, const Obstacle& o,
                                       double r_a) {
  const double rr = o.radius + r_a;
  return 2.0 / (rr * rr) * Eigen::Vector2d(pos.x() - o.x, pos.y() - o.y);
}

// Signed distance to the border line, positive on the safe side.
inline double border_distance(const Eigen::Vector2d& pos, const BorderLine& line) {
  return (line.a * pos.x() + line.b * pos.y() + line.c) / std::hypot(line.a, line.b);
}

// Border barrier: signed distance minus the hull bounding-circle radius, so
// h >= 0 keeps the whole hull off the border for any heading.
inline double border_h(const Eigen::Vector2d& pos, const BorderLine& line,
                       const VesselParams& p) {
  return border_distance(pos, line) - p.half_diagonal();
}

inline Eigen::Vector2d border_h_grad(const BorderLine& line) {
  const double n = std::hypot(line.a, line.b);
  return Eigen::Vector2d(line.a / n, line.b / n);
}

// Discrete-time barrier condition residual; >= 0 keeps the decay contract
// h_next >= (1 - gamma) * h_now.
inline double cbf_residual(double h_next, double h_now, double gamma) {
  return h_next - (1.0 - gamma) * h_now;
}

}  // namespace asv

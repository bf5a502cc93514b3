#pragma once

#include <cmath>
#include <vector>

#include "asvnav/types.hpp"

namespace asv {

// Spatially varying water-flow disturbance field. Magnitude is bounded by
// sqrt(2) everywhere; direction rotates with position.
inline double flow_force(double x, double y) {
  const double sp = std::sin(x + y);
  const double sm = std::sin(x - y);
  return std::sqrt(sp * sp + sm * sm);
}

// Flow direction. At field zeros both atan2 arguments vanish; we define the
// angle as 0 there (the magnitude is 0, so the realized force is unaffected).
inline double flow_angle(double x, double y) {
  const double sp = std::sin(x + y);
  const double sm = std::sin(x - y);
  if (sp == 0.0 && sm == 0.0) return 0.0;
  return std::atan2(sm, sp);
}

// Generalized disturbance force the plant actually experiences at (x, y):
// planar force components plus zero yaw moment.
inline Vec3 realized_disturbance(double x, double y) {
  const double f = flow_force(x, y);
  const double beta = flow_angle(x, y);
  return {f * std::cos(beta), f * std::sin(beta), 0.0};
}

// Box bounds on each planar disturbance component, quantized into n_levels
// values per axis for the worst-case search.
struct DisturbanceBounds {
  double w_min = -std::sqrt(2.0);
  double w_max = std::sqrt(2.0);
  int n_levels = 20;
};

struct DisturbanceGrid {
  std::vector<double> levels_x;
  std::vector<double> levels_y;
};

// Uniform grid over [w_min, w_max] per axis; endpoints are the exact bounds.
// Throws DimensionError for n_levels < 2 or w_min >= w_max.
DisturbanceGrid make_grid(const DisturbanceBounds& b);

}  // namespace asv

#include "asvnav/flow.hpp"

#include <string>

namespace asv {

DisturbanceGrid make_grid(const DisturbanceBounds& b) {
  if (b.n_levels < 2) {
    throw DimensionError("disturbance grid needs at least 2 levels per axis, got " +
                         std::to_string(b.n_levels));
  }
  if (!(b.w_min < b.w_max)) {
    throw DimensionError("disturbance bounds must satisfy w_min < w_max");
  }
  std::vector<double> levels(b.n_levels);
  const double span = b.w_max - b.w_min;
  for (int i = 0; i < b.n_levels; ++i) {
    levels[i] = b.w_min + span * static_cast<double>(i) / (b.n_levels - 1);
  }
  levels.front() = b.w_min;  // keep endpoints exact
  levels.back() = b.w_max;
  return {levels, levels};
}

}  // namespace asv

#include <doctest.h>

#include <cmath>

#include "asvnav/flow.hpp"
#include "asvnav/safety.hpp"

using namespace asv;
using Eigen::Vector2d;

namespace {
VesselParams hull_params() {
  static const VesselParams p = load_vessel_params(std::string(ASVNAV_DATA_DIR) +
                                                   "/cybership2.params");
  return p;
}
}  // namespace

TEST_CASE("obstacle barrier is zero on the inflated circle and -1 at the center") {
  Obstacle o{3.0, -2.0, 1.2};
  const double r_a = 0.7;
  const double rr = o.radius + r_a;
  CHECK(obstacle_h({o.x + rr, o.y}, o, r_a) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(obstacle_h({o.x, o.y + rr}, o, r_a) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(obstacle_h({o.x, o.y}, o, r_a) == -1.0);
  // quadratic growth: at twice the inflated radius, h = 3
  CHECK(obstacle_h({o.x + 2.0 * rr, o.y}, o, r_a) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("obstacle barrier gradient matches central differences") {
  Obstacle o{1.0, 2.0, 0.8};
  const double r_a = 0.7;
  const double h = 1e-7;
  const double pts[][2] = {{3.0, 4.0}, {-1.0, 2.5}, {1.3, 0.2}, {5.0, 5.0}};
  for (const auto& pt : pts) {
    const Vector2d g = obstacle_h_grad({pt[0], pt[1]}, o, r_a);
    const double gx =
        (obstacle_h({pt[0] + h, pt[1]}, o, r_a) - obstacle_h({pt[0] - h, pt[1]}, o, r_a)) /
        (2 * h);
    const double gy =
        (obstacle_h({pt[0], pt[1] + h}, o, r_a) - obstacle_h({pt[0], pt[1] - h}, o, r_a)) /
        (2 * h);
    CHECK(g[0] == doctest::Approx(gx).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx(gy).epsilon(1e-6));
  }
}

TEST_CASE("border barrier is the signed normal distance minus the hull half-diagonal") {
  const VesselParams p = hull_params();
  const double hd = p.half_diagonal();
  // line y = 1, safe side above: a=0, b=1, c=-1
  BorderLine b{0.0, 1.0, -1.0};
  CHECK(border_distance({0.0, 3.0}, b) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(border_h({0.0, 3.0}, b, p) == doctest::Approx(2.0 - hd).epsilon(1e-15));
  CHECK(border_h({5.0, 1.0}, b, p) == doctest::Approx(-hd).epsilon(1e-12));
  CHECK(border_h({0.0, 0.0}, b, p) == doctest::Approx(-1.0 - hd).epsilon(1e-12));

  const Vector2d g = border_h_grad(b);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 1.0);
}

TEST_CASE("border normalization leaves the signed distance unchanged") {
  BorderLine raw{3.0, -4.0, 10.0};  // |(a,b)| = 5
  const BorderLine n = raw.normalized();
  CHECK(std::hypot(n.a, n.b) == doctest::Approx(1.0).epsilon(1e-15));
  const double pts[][2] = {{0.0, 0.0}, {2.0, -1.0}, {-3.0, 7.0}};
  for (const auto& pt : pts) {
    const double want = (3.0 * pt[0] - 4.0 * pt[1] + 10.0) / 5.0;
    CHECK(border_distance({pt[0], pt[1]}, raw) == doctest::Approx(want).epsilon(1e-13));
    CHECK(border_distance({pt[0], pt[1]}, n) == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("discrete barrier residual formula") {
  // residual = h_next - (1 - gamma) h_now
  CHECK(cbf_residual(1.0, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(cbf_residual(2.0, 1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cbf_residual(0.85, 1.0, 0.15) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cbf_residual(0.0, 0.0, 0.3) == 0.0);
}

TEST_CASE("default barrier decay rates") {
  CbfParams c;
  CHECK(c.gamma_o == 0.15);
  CHECK(c.gamma_b == 0.9);
}

TEST_CASE("flow force magnitude is bounded by sqrt(2) over a dense grid") {
  const double bound = std::sqrt(2.0) + 1e-12;
  double max_seen = 0.0;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 200; ++j) {
      const double x = -10.0 + 20.0 * i / 199.0;
      const double y = -10.0 + 20.0 * j / 199.0;
      const double f = flow_force(x, y);
      CHECK(f >= 0.0);
      CHECK(f <= bound);
      max_seen = std::max(max_seen, f);
    }
  }
  // the bound is near-attained somewhere on the grid
  CHECK(max_seen > 1.3);
}

TEST_CASE("flow angle at the origin is zero by convention") {
  CHECK(flow_angle(0.0, 0.0) == 0.0);
}

TEST_CASE("realized disturbance reduces to componentwise sines") {
  // f cos(beta) = sin(x+y), f sin(beta) = sin(x-y)
  const double pts[][2] = {{0.3, -0.7}, {1.0, 2.0}, {-2.5, 0.4}, {4.0, -4.0}, {0.0, 0.0}};
  for (const auto& pt : pts) {
    const Vec3 w = realized_disturbance(pt[0], pt[1]);
    CHECK(std::abs(w[0] - std::sin(pt[0] + pt[1])) <= 1e-15);
    CHECK(std::abs(w[1] - std::sin(pt[0] - pt[1])) <= 1e-15);
    CHECK(w[2] == 0.0);
  }
}

TEST_CASE("disturbance grid has exact endpoints and uniform spacing") {
  DisturbanceBounds b;
  CHECK(b.w_min == -std::sqrt(2.0));
  CHECK(b.w_max == std::sqrt(2.0));
  CHECK(b.n_levels == 20);

  const DisturbanceGrid grid = make_grid(b);
  REQUIRE(grid.levels_x.size() == 20);
  REQUIRE(grid.levels_y.size() == 20);
  for (const auto* axis : {&grid.levels_x, &grid.levels_y}) {
    CHECK(axis->front() == b.w_min);
    CHECK(axis->back() == b.w_max);
    const double spacing = 2.0 * std::sqrt(2.0) / 19.0;
    for (size_t i = 1; i < axis->size(); ++i) {
      CHECK((*axis)[i] - (*axis)[i - 1] == doctest::Approx(spacing).epsilon(1e-12));
    }
  }
}

TEST_CASE("grid construction rejects degenerate requests") {
  CHECK_THROWS_AS(make_grid({-1.0, 1.0, 1}), DimensionError);
  CHECK_THROWS_AS(make_grid({1.0, -1.0, 20}), DimensionError);
  CHECK_THROWS_AS(make_grid({1.0, 1.0, 20}), DimensionError);
}

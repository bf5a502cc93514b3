#pragma once

#include <Eigen/Core>
#include <cmath>

namespace asv {

// Forward-mode AD scalar carrying first derivatives w.r.t. N seed variables.
// Enough for the 6-state/3-input dynamics Jacobians; no taping, no heap.
template <int N>
struct Dual {
  double v = 0.0;
  Eigen::Matrix<double, N, 1> d = Eigen::Matrix<double, N, 1>::Zero();

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design, constants promote
  Dual(double value, const Eigen::Matrix<double, N, 1>& deriv) : v(value), d(deriv) {}

  static Dual seed(double value, int slot) {
    Dual r(value);
    r.d[slot] = 1.0;
    return r;
  }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) { d = (d * o.v - v * o.d) / (o.v * o.v); v /= o.v; return *this; }
};

template <int N> inline Dual<N> operator-(const Dual<N>& a) { return {-a.v, (-a.d).eval()}; }
template <int N> inline Dual<N> operator+(Dual<N> a, const Dual<N>& b) { a += b; return a; }
template <int N> inline Dual<N> operator-(Dual<N> a, const Dual<N>& b) { a -= b; return a; }
template <int N> inline Dual<N> operator*(Dual<N> a, const Dual<N>& b) { a *= b; return a; }
template <int N> inline Dual<N> operator/(Dual<N> a, const Dual<N>& b) { a /= b; return a; }

template <int N> inline Dual<N> operator+(double s, Dual<N> a) { a.v += s; return a; }
template <int N> inline Dual<N> operator+(Dual<N> a, double s) { a.v += s; return a; }
template <int N> inline Dual<N> operator-(double s, const Dual<N>& a) { return {s - a.v, (-a.d).eval()}; }
template <int N> inline Dual<N> operator-(Dual<N> a, double s) { a.v -= s; return a; }
template <int N> inline Dual<N> operator*(double s, Dual<N> a) { a.v *= s; a.d *= s; return a; }
template <int N> inline Dual<N> operator*(Dual<N> a, double s) { a.v *= s; a.d *= s; return a; }
template <int N> inline Dual<N> operator/(Dual<N> a, double s) { a.v /= s; a.d /= s; return a; }
template <int N> inline Dual<N> operator/(double s, const Dual<N>& a) {
  return {s / a.v, (-s / (a.v * a.v) * a.d).eval()};
}

template <int N> inline bool operator<(const Dual<N>& a, const Dual<N>& b) { return a.v < b.v; }
template <int N> inline bool operator>(const Dual<N>& a, const Dual<N>& b) { return a.v > b.v; }
template <int N> inline bool operator<(const Dual<N>& a, double b) { return a.v < b; }
template <int N> inline bool operator>(const Dual<N>& a, double b) { return a.v > b; }

template <int N> inline Dual<N> sin(const Dual<N>& a) { return {std::sin(a.v), (std::cos(a.v) * a.d).eval()}; }
template <int N> inline Dual<N> cos(const Dual<N>& a) { return {std::cos(a.v), (-std::sin(a.v) * a.d).eval()}; }
template <int N> inline Dual<N> sqrt(const Dual<N>& a) {
  const double s = std::sqrt(a.v);
  return {s, (0.5 / s * a.d).eval()};
}

// |x| with subgradient 0 at the kink; the damping terms hit this only at
// exactly-zero velocity components.
template <int N> inline Dual<N> abs(const Dual<N>& a) {
  if (a.v > 0.0) return a;
  if (a.v < 0.0) return -a;
  return Dual<N>(0.0);
}

}  // namespace asv

// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense second-order forward-mode scalar: value, gradient and Hessian with
// respect to N element variables. Element energies are small (N <= 12), so
// carrying the full N x N Hessian through each operation is cheap enough.

#include <cmath>

#include <Eigen/Core>

namespace foldlab::detail {

template <int N>
struct Dual2 {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;

  double v = 0.0;
  Vec g = Vec::Zero();
  Mat h = Mat::Zero();

  Dual2() = default;
  Dual2(double value) : v(value) {}  // NOLINT: constants promote implicitly

  static Dual2 variable(double value, int index) {
    Dual2 d(value);
    d.g[index] = 1.0;
    return d;
  }
};

template <int N>
Dual2<N> chain(const Dual2<N>& u, double f, double df, double d2f) {
  Dual2<N> r;
  r.v = f;
  r.g = df * u.g;
  r.h = df * u.h + d2f * u.g * u.g.transpose();
  return r;
}

template <int N>
Dual2<N> operator+(const Dual2<N>& a, const Dual2<N>& b) {
  Dual2<N> r;
  r.v = a.v + b.v;
  r.g = a.g + b.g;
  r.h = a.h + b.h;
  return r;
}

template <int N>
Dual2<N> operator-(const Dual2<N>& a, const Dual2<N>& b) {
  Dual2<N> r;
  r.v = a.v - b.v;
  r.g = a.g - b.g;
  r.h = a.h - b.h;
  return r;
}

template <int N>
Dual2<N> operator-(const Dual2<N>& a) {
  Dual2<N> r;
  r.v = -a.v;
  r.g = -a.g;
  r.h = -a.h;
  return r;
}

template <int N>
Dual2<N> operator*(const Dual2<N>& a, const Dual2<N>& b) {
  Dual2<N> r;
  r.v = a.v * b.v;
  r.g = a.v * b.g + b.v * a.g;
  const typename Dual2<N>::Mat outer = a.g * b.g.transpose();
  r.h = a.v * b.h + b.v * a.h + outer + outer.transpose();
  return r;
}

template <int N>
Dual2<N> operator*(double s, const Dual2<N>& a) {
  Dual2<N> r;
  r.v = s * a.v;
  r.g = s * a.g;
  r.h = s * a.h;
  return r;
}

template <int N>
Dual2<N> operator*(const Dual2<N>& a, double s) {
  return s * a;
}

template <int N>
Dual2<N> operator+(const Dual2<N>& a, double s) {
  Dual2<N> r = a;
  r.v += s;
  return r;
}

template <int N>
Dual2<N> operator-(const Dual2<N>& a, double s) {
  Dual2<N> r = a;
  r.v -= s;
  return r;
}

template <int N>
Dual2<N> inverse(const Dual2<N>& a) {
  const double inv = 1.0 / a.v;
  return chain(a, inv, -inv * inv, 2.0 * inv * inv * inv);
}

template <int N>
Dual2<N> operator/(const Dual2<N>& a, const Dual2<N>& b) {
  return a * inverse(b);
}

template <int N>
Dual2<N> operator/(const Dual2<N>& a, double s) {
  return (1.0 / s) * a;
}

template <int N>
Dual2<N> sqrt(const Dual2<N>& a) {
  const double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}

template <int N>
Dual2<N> log(const Dual2<N>& a) {
  return chain(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

template <int N>
Dual2<N> atan2(const Dual2<N>& y, const Dual2<N>& x) {
  const double r2 = x.v * x.v + y.v * y.v;
  const double r4 = r2 * r2;
  const double dy = x.v / r2;
  const double dx = -y.v / r2;
  const double dyy = -2.0 * x.v * y.v / r4;
  const double dxx = 2.0 * x.v * y.v / r4;
  const double dxy = (y.v * y.v - x.v * x.v) / r4;
  Dual2<N> r;
  r.v = std::atan2(y.v, x.v);
  r.g = dy * y.g + dx * x.g;
  const typename Dual2<N>::Mat cross = x.g * y.g.transpose();
  r.h = dy * y.h + dx * x.h + dyy * y.g * y.g.transpose() + dxx * x.g * x.g.transpose() +
        dxy * (cross + cross.transpose());
  return r;
}

/// Minimal 3-vector over an arbitrary scalar.
template <class T>
struct V3 {
  T x, y, z;
};

template <class T>
V3<T> operator-(const V3<T>& a, const V3<T>& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <class T>
V3<T> operator+(const V3<T>& a, const V3<T>& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

template <class T, class S>
V3<T> scale(const S& s, const V3<T>& a) {
  return {s * a.x, s * a.y, s * a.z};
}

template <class T>
T dot(const V3<T>& a, const V3<T>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T>
V3<T> cross(const V3<T>& a, const V3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <int N>
V3<Dual2<N>> variable_point(const Eigen::Vector3d& p, int first_index) {
  return {Dual2<N>::variable(p[0], first_index), Dual2<N>::variable(p[1], first_index + 1),
          Dual2<N>::variable(p[2], first_index + 2)};
}

}  // namespace foldlab::detail

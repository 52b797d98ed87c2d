#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace cmclab {

// Points and vectors always carry three components; in 2-D the third is zero.
using Vec = std::array<double, 3>;

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator-(const Vec& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec operator*(const Vec& a, double s) { return s * a; }
inline Vec operator/(const Vec& a, double s) { return {a[0] / s, a[1] / s, a[2] / s}; }
inline Vec& operator+=(Vec& a, const Vec& b) {
  a[0] += b[0];
  a[1] += b[1];
  a[2] += b[2];
  return a;
}
inline Vec& operator-=(Vec& a, const Vec& b) {
  a[0] -= b[0];
  a[1] -= b[1];
  a[2] -= b[2];
  return a;
}

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }
inline double distance(const Vec& a, const Vec& b) { return norm(a - b); }
inline Vec cross(const Vec& a, const Vec& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec normalized(const Vec& a) {
  const double n = norm(a);
  return n > 0.0 ? a / n : Vec{0.0, 0.0, 0.0};
}

// Symmetric 3x3 matrix stored as xx, yy, zz, xy, xz, yz.
struct SymMat {
  std::array<double, 6> v{};

  double operator()(int r, int c) const {
    static constexpr int map[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    return v[map[r][c]];
  }
  double& at(int r, int c) {
    static constexpr int map[3][3] = {{0, 3, 4}, {3, 1, 5}, {4, 5, 2}};
    return v[map[r][c]];
  }
  double trace() const { return v[0] + v[1] + v[2]; }
  // Squared Frobenius norm.
  double frob2() const {
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + 2.0 * (v[3] * v[3] + v[4] * v[4] + v[5] * v[5]);
  }
  Vec apply(const Vec& x) const {
    return {v[0] * x[0] + v[3] * x[1] + v[4] * x[2], v[3] * x[0] + v[1] * x[1] + v[5] * x[2],
            v[4] * x[0] + v[5] * x[1] + v[2] * x[2]};
  }
};

inline SymMat operator+(const SymMat& a, const SymMat& b) {
  SymMat r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = a.v[i] + b.v[i];
  return r;
}
inline SymMat operator*(double s, const SymMat& a) {
  SymMat r;
  for (std::size_t i = 0; i < 6; ++i) r.v[i] = s * a.v[i];
  return r;
}

// Identity restricted to the first `dim` axes.
inline SymMat identity_matrix(int dim) {
  SymMat m;
  for (int a = 0; a < dim; ++a) m.v[static_cast<std::size_t>(a)] = 1.0;
  return m;
}

inline constexpr double kPi = 3.14159265358979323846;

// Volume of the unit ball in R^k (k = 1, 2, 3, 4).
double unit_ball_volume(int k);
// H^{k-1} measure of the unit sphere in R^k.
double unit_sphere_area(int k);

}  // namespace cmclab

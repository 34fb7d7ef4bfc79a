#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <stdexcept>

namespace tpp {

inline constexpr int kMaxDim = 3;

// Small fixed-capacity point/vector. Components beyond `dim` are kept at zero
// so that arithmetic can run over the full capacity without branching.
struct Vec {
  std::array<double, kMaxDim> c{};
  int dim = 0;

  Vec() = default;
  explicit Vec(int d) : dim(d) {
    if (d < 1 || d > kMaxDim) throw std::invalid_argument("Vec: dimension out of range");
  }
  Vec(std::initializer_list<double> xs) : dim(static_cast<int>(xs.size())) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("Vec: dimension out of range");
    int i = 0;
    for (double x : xs) c[i++] = x;
  }

  static Vec unit(int d, int axis) {
    Vec v(d);
    v.c[axis] = 1.0;
    return v;
  }

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < kMaxDim; ++i) c[i] += o.c[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < kMaxDim; ++i) c[i] -= o.c[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < kMaxDim; ++i) c[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec a, const Vec& b) { return a += b; }
inline Vec operator-(Vec a, const Vec& b) { return a -= b; }
inline Vec operator*(Vec a, double s) { return a *= s; }
inline Vec operator*(double s, Vec a) { return a *= s; }
inline Vec operator-(Vec a) { return a *= -1.0; }

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < kMaxDim; ++i) s += a.c[i] * b.c[i];
  return s;
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline bool all_finite(const Vec& a) {
  for (int i = 0; i < kMaxDim; ++i)
    if (!std::isfinite(a.c[i])) return false;
  return true;
}

// Symmetric 3x3 matrix, used for Hessians.
struct Mat {
  std::array<std::array<double, kMaxDim>, kMaxDim> m{};
  double operator()(int i, int j) const { return m[i][j]; }
  double& operator()(int i, int j) { return m[i][j]; }
  double trace() const { return m[0][0] + m[1][1] + m[2][2]; }
};

}  // namespace tpp

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace osn {

// Dense vector. All numerics in the library are double precision.
using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm2_squared(const Vec& a) { return dot(a, a); }

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline void scale(Vec& x, double c) {
  for (double& v : x) v *= c;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline bool has_non_finite(const Vec& a) {
  for (double v : a)
    if (!std::isfinite(v)) return true;
  return false;
}

// avg = (1 - alpha) * avg + alpha * value; shared by every weighted-average
// consumer so vectors and matrices blend through the same recursion.
inline void blend(Vec& avg, const Vec& value, double alpha) {
  for (std::size_t i = 0; i < avg.size(); ++i) avg[i] = (1.0 - alpha) * avg[i] + alpha * value[i];
}

}  // namespace osn

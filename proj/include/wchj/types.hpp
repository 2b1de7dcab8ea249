#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace wchj {

/// A point of the torus T^N or of R^N for N <= 2. Unused coordinates are 0.
using Point = std::array<double, 2>;

inline constexpr int kMaxSpaceDim = 2;
inline constexpr double kPi = 3.14159265358979323846;

inline double dot(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * b[k];
  return s;
}

inline double norm(const Point& a, int dim) { return std::sqrt(dot(a, a, dim)); }

}  // namespace wchj

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace augpt {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

inline void normalize_in_place(std::span<double> v) {
  double n = norm(v);
  if (n > 0.0)
    for (auto& x : v) x /= n;
}

inline std::vector<double> normalized(std::vector<double> v) {
  normalize_in_place(v);
  return v;
}

}  // namespace augpt

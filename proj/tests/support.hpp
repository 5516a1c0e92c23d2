#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "hypar/field.hpp"

namespace hypar::test {

inline constexpr double pi = std::numbers::pi;

// Samples f(x) on every component; x has g.d coordinates.
inline Field sample(const GridSpec& g, const std::function<double(int c, const double* x)>& f) {
  std::vector<double> v(g.n * g.points());
  std::vector<double> x(g.d);
  for (std::size_t p = 0; p < g.points(); ++p) {
    std::size_t r = p;
    for (int a = g.d - 1; a >= 0; --a) {
      x[a] = static_cast<double>(r % g.N) * g.dx();
      r /= g.N;
    }
    for (int c = 0; c < g.n; ++c) v[c * g.points() + p] = f(c, x.data());
  }
  return Field(g, std::move(v));
}

inline Field cos_mode(const GridSpec& g, int k, double a = 1.0, int axis = 0) {
  return sample(g, [&](int, const double* x) { return a * std::cos(k * g.k0() * x[axis]); });
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace hypar::test

#pragma once

#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "hypar/grid.hpp"

namespace hypar {

// n-component real field on a periodic grid, component-major storage.
// The spectrum is computed on first use and shared between copies; any
// mutable access detaches the cache.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& g);
  Field(const GridSpec& g, std::vector<double> values);

  static Field from_spectrum(const GridSpec& g, const std::vector<cplx>& spec);

  const GridSpec& grid() const { return g_; }
  int components() const { return g_.n; }
  std::size_t points() const { return g_.points(); }

  std::span<const double> values() const { return v_; }
  std::span<double> mutable_values();
  std::span<const double> component(int c) const;
  std::span<double> mutable_component(int c);
  double at(int c, std::size_t p) const { return v_[c * g_.points() + p]; }

  const std::vector<cplx>& spectrum() const;
  std::span<const cplx> component_spectrum(int c) const;

  Field component_field(int c) const;
  Field components_range(int first, int count) const;
  static Field stack(const std::vector<Field>& parts);

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double a);
  Field& axpy(double a, const Field& x);  // this += a*x

  double l2() const;    // box L2 norm over all components
  double linf() const;  // max pointwise Euclidean norm
  bool finite() const;
  bool is_zero() const;

 private:
  struct Cache {
    std::once_flag once;
    std::vector<cplx> spec;
  };
  void check_same(const Field& o) const;

  GridSpec g_;
  std::vector<double> v_;
  mutable std::shared_ptr<Cache> cache_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

}  // namespace hypar

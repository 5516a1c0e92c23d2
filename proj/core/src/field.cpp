#include "hypar/field.hpp"

#include <cmath>

#include "hypar/errors.hpp"
#include "hypar/fft.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

Field::Field(const GridSpec& g)
    : g_(g), v_(g.points() * g.n, 0.0), cache_(std::make_shared<Cache>()) {
  g_.validate();
}

Field::Field(const GridSpec& g, std::vector<double> values)
    : g_(g), v_(std::move(values)), cache_(std::make_shared<Cache>()) {
  g_.validate();
  if (v_.size() != g_.points() * g_.n) throw InvalidArgument("field: value count does not match grid");
}

Field Field::from_spectrum(const GridSpec& g, const std::vector<cplx>& spec) {
  Field f(g);
  const std::size_t nm = g.modes(), np = g.points();
  if (spec.size() != nm * g.n) throw InvalidArgument("field: spectrum size does not match grid");
  for (int c = 0; c < g.n; ++c) fft::inverse(g, spec.data() + c * nm, f.v_.data() + c * np);
  return f;
}

std::span<double> Field::mutable_values() {
  cache_ = std::make_shared<Cache>();
  return v_;
}

std::span<const double> Field::component(int c) const {
  return std::span<const double>(v_).subspan(c * g_.points(), g_.points());
}

std::span<double> Field::mutable_component(int c) {
  cache_ = std::make_shared<Cache>();
  return std::span<double>(v_).subspan(c * g_.points(), g_.points());
}

const std::vector<cplx>& Field::spectrum() const {
  static const std::vector<cplx> empty;
  if (!cache_) return empty;
  Cache* cache = cache_.get();
  std::call_once(cache->once, [&] {
    const std::size_t nm = g_.modes(), np = g_.points();
    cache->spec.resize(nm * g_.n);
    for (int c = 0; c < g_.n; ++c) fft::forward(g_, v_.data() + c * np, cache->spec.data() + c * nm);
  });
  return cache->spec;
}

std::span<const cplx> Field::component_spectrum(int c) const {
  return std::span<const cplx>(spectrum()).subspan(c * g_.modes(), g_.modes());
}

Field Field::component_field(int c) const { return components_range(c, 1); }

Field Field::components_range(int first, int count) const {
  if (first < 0 || count < 0 || first + count > g_.n) throw InvalidArgument("field: component range out of bounds");
  const std::size_t np = g_.points();
  std::vector<double> v(v_.begin() + first * np, v_.begin() + (first + count) * np);
  if (count == 0) return Field();
  return Field(g_.with_components(count), std::move(v));
}

Field Field::stack(const std::vector<Field>& parts) {
  if (parts.empty()) throw InvalidArgument("field: nothing to stack");
  int n = 0;
  for (const auto& p : parts) {
    if (!p.grid().same_mesh(parts[0].grid())) throw InvalidArgument("field: stacking fields on different meshes");
    n += p.components();
  }
  std::vector<double> v;
  v.reserve(parts[0].points() * n);
  for (const auto& p : parts) v.insert(v.end(), p.v_.begin(), p.v_.end());
  return Field(parts[0].grid().with_components(n), std::move(v));
}

void Field::check_same(const Field& o) const {
  if (!(g_ == o.g_)) throw InvalidArgument("field: grid mismatch");
}

Field& Field::operator+=(const Field& o) {
  check_same(o);
  cache_ = std::make_shared<Cache>();
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_same(o);
  cache_ = std::make_shared<Cache>();
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

Field& Field::operator*=(double a) {
  cache_ = std::make_shared<Cache>();
  for (double& x : v_) x *= a;
  return *this;
}

Field& Field::axpy(double a, const Field& x) {
  check_same(x);
  cache_ = std::make_shared<Cache>();
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
  return *this;
}

double Field::l2() const {
  double s = 0.0;
  for (double x : v_) s += x * x;
  return std::sqrt(s * g_.cell_volume());
}

double Field::linf() const {
  const std::size_t np = g_.points();
  double m = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    double s = 0.0;
    for (int c = 0; c < g_.n; ++c) s += v_[c * np + p] * v_[c * np + p];
    m = std::max(m, s);
  }
  return std::sqrt(m);
}

bool Field::finite() const {
  for (double x : v_)
    if (!std::isfinite(x)) return false;
  return true;
}

bool Field::is_zero() const {
  for (double x : v_)
    if (x != 0.0) return false;
  return true;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

}  // namespace hypar

#include "hypar/grid.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "hypar/errors.hpp"

namespace hypar {

std::size_t GridSpec::points() const {
  std::size_t p = 1;
  for (int a = 0; a < d; ++a) p *= static_cast<std::size_t>(N);
  return p;
}

std::size_t GridSpec::modes() const {
  std::size_t m = static_cast<std::size_t>(N / 2 + 1);
  for (int a = 0; a + 1 < d; ++a) m *= static_cast<std::size_t>(N);
  return m;
}

double GridSpec::cell_volume() const { return std::pow(dx(), d); }
double GridSpec::volume() const { return std::pow(L, d); }

GridSpec GridSpec::with_components(int ncomp) const {
  GridSpec g = *this;
  g.n = ncomp;
  return g;
}

GridSpec GridSpec::with_resolution(int newN) const {
  GridSpec g = *this;
  g.N = newN;
  return g;
}

void GridSpec::validate() const {
  if (d < 1 || d > 3) throw InvalidArgument("grid: d must be 1, 2 or 3, got " + std::to_string(d));
  if (N < 8 || (N & (N - 1)) != 0)
    throw InvalidArgument("grid: N must be a power of two >= 8, got " + std::to_string(N));
  if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("grid: L must be positive");
  if (n < 1) throw InvalidArgument("grid: n must be >= 1");
}

namespace {

std::shared_ptr<const FreqTable> build_table(int d, int N, double L) {
  auto t = std::make_shared<FreqTable>();
  t->d = d;
  t->N = N;
  GridSpec g{d, N, L, 1};
  t->modes = g.modes();
  t->k.resize(t->modes * d);
  t->xi.resize(t->modes * d);
  t->abs_xi.resize(t->modes);
  t->weight.resize(t->modes);
  t->nyq_mask.resize(t->modes);
  const double k0 = g.k0();
  const int half = N / 2 + 1;
  std::vector<int> idx(d, 0);
  for (std::size_t m = 0; m < t->modes; ++m) {
    std::size_t r = m;
    idx[d - 1] = static_cast<int>(r % half);
    r /= half;
    for (int a = d - 2; a >= 0; --a) {
      idx[a] = static_cast<int>(r % N);
      r /= N;
    }
    double s2 = 0.0;
    std::uint8_t mask = 0;
    for (int a = 0; a < d; ++a) {
      int k = (a == d - 1) ? idx[a] : (idx[a] < N / 2 ? idx[a] : idx[a] - N);
      t->k[m * d + a] = k;
      double x = k0 * k;
      t->xi[m * d + a] = x;
      s2 += x * x;
      if (std::abs(k) == N / 2) mask |= static_cast<std::uint8_t>(1u << a);
    }
    t->abs_xi[m] = std::sqrt(s2);
    t->max_abs_xi = std::max(t->max_abs_xi, t->abs_xi[m]);
    t->nyq_mask[m] = mask;
    const int kl = idx[d - 1];
    t->weight[m] = (kl == 0 || kl == N / 2) ? 1.0 : 2.0;
  }
  return t;
}

}  // namespace

std::shared_ptr<const FreqTable> freq_table(const GridSpec& g) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const FreqTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(g.d, g.N, g.L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto t = build_table(g.d, g.N, g.L);
  cache.emplace(key, t);
  return t;
}

}  // namespace hypar

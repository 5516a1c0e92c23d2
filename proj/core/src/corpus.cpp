#include "hypar/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hypar/errors.hpp"
#include "hypar/filter.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

double int_radius(const FreqTable& ft, std::size_t m) {
  double r = 0.0;
  for (int a = 0; a < ft.d; ++a) r += static_cast<double>(ft.k_of(m)[a]) * ft.k_of(m)[a];
  return std::sqrt(r);
}

std::vector<double> coords(const GridSpec& g, std::size_t p) {
  std::vector<double> x(static_cast<std::size_t>(g.d));
  for (int a = g.d - 1; a >= 0; --a) {
    x[a] = static_cast<double>(p % g.N) * g.dx();
    p /= g.N;
  }
  return x;
}

Field normalized(Field u, double amp) {
  const double m = u.linf();
  if (m > 0.0) u *= amp / m;
  return u;
}

Field band_limit(const Field& u, int band, double slope) {
  auto ft = freq_table(u.grid());
  std::vector<double> mult(u.grid().modes(), 0.0);
  for (std::size_t m = 0; m < mult.size(); ++m) {
    const double r = int_radius(*ft, m);
    if (r <= band && (slope == 0.0 || r > 0.0)) mult[m] = slope == 0.0 ? 1.0 : std::pow(r, slope);
  }
  return apply_multiplier(u, mult);
}

}  // namespace

const char* family_name(CorpusFamily f) {
  switch (f) {
    case CorpusFamily::random_slope: return "random";
    case CorpusFamily::bump: return "bump";
    case CorpusFamily::pure_mode: return "mode";
  }
  return "?";
}

Corpus make_corpus(const GridSpec& grid, std::uint64_t seed, const CorpusOptions& opt) {
  GridSpec g = grid.with_components(1);
  g.validate();
  if (opt.per_family < 1) throw InvalidArgument("corpus: per_family must be positive");
  if (!(opt.amplitude > 0.0)) throw InvalidArgument("corpus: amplitude must be positive");
  Corpus c;
  c.grid = g;
  c.seed = seed;
  c.band = std::max(1, 3 * g.N / 16);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit;
  const std::size_t P = g.points();
  auto add = [&](Field f, CorpusFamily fam, std::string label) {
    c.fields.push_back(normalized(std::move(f), opt.amplitude));
    c.family.push_back(fam);
    c.labels.push_back(std::move(label));
  };

  const double slope = -0.5 * (g.d + 1);
  for (int i = 0; i < opt.per_family; ++i) {
    std::vector<double> v(P);
    for (double& x : v) x = normal(rng);
    add(band_limit(Field(g, std::move(v)), c.band, slope), CorpusFamily::random_slope, "random-" + std::to_string(i));
  }

  const double widths[3] = {g.L / 6.0, g.L / 10.0, g.L / 14.0};
  for (int i = 0; i < opt.per_family; ++i) {
    const double w = widths[i % 3];
    std::vector<double> x0(static_cast<std::size_t>(g.d));
    for (double& x : x0) x = unit(rng) * g.L;
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    std::vector<double> v(P);
    for (std::size_t p = 0; p < P; ++p) {
      const auto x = coords(g, p);
      double r2 = 0.0;
      for (int a = 0; a < g.d; ++a) {
        double dx = std::fabs(x[a] - x0[a]);
        dx = std::min(dx, g.L - dx);
        r2 += dx * dx;
      }
      v[p] = sign * std::exp(-0.5 * r2 / (w * w));
    }
    add(band_limit(Field(g, std::move(v)), c.band, 0.0), CorpusFamily::bump, "bump-" + std::to_string(i));
  }

  // Radii near 1.4 * 2^j in physical frequency sit where a single block carries the mode.
  std::vector<double> radii;
  for (int j = 0;; ++j) {
    const double r = std::round(1.4 * std::ldexp(1.0, j) / g.k0());
    if (r > c.band) break;
    if (r >= 1.0 && (radii.empty() || r != radii.back())) radii.push_back(r);
  }
  if (radii.empty()) radii.push_back(1.0);
  for (int i = 0; i < opt.per_family; ++i) {
    const double r = radii[static_cast<std::size_t>(i) % radii.size()];
    std::vector<int> k(static_cast<std::size_t>(g.d), 0);
    if (g.d == 1) {
      k[0] = static_cast<int>(r);
    } else {
      for (;;) {
        const double th = unit(rng) * 2.0 * std::numbers::pi;
        k[0] = static_cast<int>(std::lround(r * std::cos(th)));
        k[1] = static_cast<int>(std::lround(r * std::sin(th)));
        for (int a = 2; a < g.d; ++a) k[a] = 0;
        double rr = 0.0;
        for (int kk : k) rr += double(kk) * kk;
        if (rr > 0.0 && std::sqrt(rr) <= c.band) break;
      }
    }
    const double ph = unit(rng) * 2.0 * std::numbers::pi;
    std::vector<double> v(P);
    for (std::size_t p = 0; p < P; ++p) {
      const auto x = coords(g, p);
      double arg = ph;
      for (int a = 0; a < g.d; ++a) arg += g.k0() * k[a] * x[a];
      v[p] = std::cos(arg);
    }
    add(Field(g, std::move(v)), CorpusFamily::pure_mode, "mode-" + std::to_string(i));
  }
  return c;
}

Corpus Corpus::at_resolution(int N) const {
  Corpus out = *this;
  out.grid = grid.with_resolution(N);
  for (auto& f : out.fields) f = resample(f, N);
  return out;
}

Corpus Corpus::scaled(double lambda) const {
  Corpus out = *this;
  for (auto& f : out.fields) f *= lambda;
  return out;
}

Corpus Corpus::subset(CorpusFamily fam) const {
  Corpus out;
  out.grid = grid;
  out.seed = seed;
  out.band = band;
  for (std::size_t i = 0; i < size(); ++i)
    if (family[i] == fam) {
      out.fields.push_back(fields[i]);
      out.family.push_back(family[i]);
      out.labels.push_back(labels[i]);
    }
  return out;
}

double top_annulus_energy(const Field& u) {
  const auto fb = filter_bank(u.grid());
  const double tot = u.l2();
  if (tot == 0.0) return 0.0;
  const double top = dyadic_block(u, BlockIndex{fb->j_top(), Flavor::nonhomogeneous}).l2();
  return (top * top) / (tot * tot);
}

std::vector<Field> vector_members(const Corpus& c, int ncomp) {
  if (ncomp < 1) throw InvalidArgument("corpus: ncomp must be positive");
  std::vector<Field> out;
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Field> parts;
    for (int k = 0; k < ncomp; ++k) parts.push_back(c.fields[(i + static_cast<std::size_t>(k) * 7) % n]);
    out.push_back(ncomp == 1 ? parts[0] : Field::stack(parts));
  }
  return out;
}

}  // namespace hypar

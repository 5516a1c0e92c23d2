#include "hypar/spectral.hpp"

#include <cmath>
#include <cstdlib>

#include "hypar/errors.hpp"
#include "hypar/fft.hpp"

namespace hypar {

namespace {

std::vector<cplx> spectrum_times(const Field& u, const std::vector<cplx>& mult) {
  const auto& s = u.spectrum();
  const std::size_t nm = u.grid().modes();
  std::vector<cplx> out(s.size());
  for (int c = 0; c < u.components(); ++c)
    for (std::size_t m = 0; m < nm; ++m) out[c * nm + m] = s[c * nm + m] * mult[m];
  return out;
}

}  // namespace

Field spectral_derivative(const Field& u, int alpha) {
  const GridSpec& g = u.grid();
  if (alpha < 0 || alpha >= g.d) throw InvalidArgument("derivative direction out of range");
  auto ft = freq_table(g);
  std::vector<cplx> mult(g.modes());
  for (std::size_t m = 0; m < g.modes(); ++m)
    mult[m] = (ft->nyq_mask[m] >> alpha) & 1u ? cplx(0.0) : cplx(0.0, ft->xi_of(m)[alpha]);
  return Field::from_spectrum(g, spectrum_times(u, mult));
}

Field spectral_second_derivative(const Field& u, int alpha, int beta) {
  const GridSpec& g = u.grid();
  auto ft = freq_table(g);
  std::vector<cplx> mult(g.modes());
  for (std::size_t m = 0; m < g.modes(); ++m) {
    const bool nyq = ((ft->nyq_mask[m] >> alpha) & 1u) || ((ft->nyq_mask[m] >> beta) & 1u);
    mult[m] = nyq ? 0.0 : -ft->xi_of(m)[alpha] * ft->xi_of(m)[beta];
  }
  return Field::from_spectrum(g, spectrum_times(u, mult));
}

Field spectral_gradient(const Field& u) {
  const GridSpec& g = u.grid();
  std::vector<Field> parts;
  parts.reserve(static_cast<std::size_t>(g.d * g.n));
  for (int c = 0; c < g.n; ++c) {
    Field uc = u.component_field(c);
    for (int a = 0; a < g.d; ++a) parts.push_back(spectral_derivative(uc, a));
  }
  return Field::stack(parts);
}

Field apply_multiplier(const Field& u, const std::vector<double>& mult) {
  const GridSpec& g = u.grid();
  if (mult.size() != g.modes()) throw InvalidArgument("multiplier size does not match grid");
  const auto& s = u.spectrum();
  const std::size_t nm = g.modes();
  std::vector<cplx> out(s.size());
  for (int c = 0; c < g.n; ++c)
    for (std::size_t m = 0; m < nm; ++m) out[c * nm + m] = s[c * nm + m] * mult[m];
  return Field::from_spectrum(g, out);
}

std::vector<double> dealias_mask(const GridSpec& g) {
  auto ft = freq_table(g);
  std::vector<double> mask(g.modes(), 1.0);
  const int kmax = g.N / 3;
  for (std::size_t m = 0; m < g.modes(); ++m)
    for (int a = 0; a < g.d; ++a)
      if (std::abs(ft->k_of(m)[a]) > kmax) mask[m] = 0.0;
  return mask;
}

void dealias_spectrum(const GridSpec& g, cplx* spec) {
  auto ft = freq_table(g);
  const int kmax = g.N / 3;
  for (std::size_t m = 0; m < g.modes(); ++m)
    for (int a = 0; a < g.d; ++a)
      if (std::abs(ft->k_of(m)[a]) > kmax) {
        spec[m] = 0.0;
        break;
      }
}

Field dealias(const Field& u) { return apply_multiplier(u, dealias_mask(u.grid())); }

Field resample(const Field& u, int M) {
  const GridSpec& g = u.grid();
  GridSpec h = g.with_resolution(M);
  h.validate();
  if (M == g.N) return u;
  auto fs = freq_table(g);
  const std::size_t nm_src = g.modes(), nm_dst = h.modes();
  const int lim = std::min(g.N, M) / 2;
  const double scale = std::pow(static_cast<double>(M) / g.N, g.d);
  const auto& s = u.spectrum();
  std::vector<cplx> out(nm_dst * g.n, 0.0);
  const int halfM = M / 2 + 1;
  for (std::size_t m = 0; m < nm_src; ++m) {
    const int* k = fs->k_of(m);
    bool keep = true;
    for (int a = 0; a < g.d; ++a)
      if (std::abs(k[a]) >= lim) keep = false;
    if (!keep) continue;
    std::size_t idx = 0;
    for (int a = 0; a < g.d; ++a) {
      const int dim = (a == g.d - 1) ? halfM : M;
      const int i = (a == g.d - 1) ? k[a] : (k[a] >= 0 ? k[a] : k[a] + M);
      idx = idx * dim + i;
    }
    for (int c = 0; c < g.n; ++c) out[c * nm_dst + idx] = s[c * nm_src + m] * scale;
  }
  return Field::from_spectrum(h, out);
}

double upsampled_linf(const Field& u, int factor) {
  if (factor <= 1) return u.linf();
  return resample(u, u.grid().N * factor).linf();
}

double parseval_sq(const GridSpec& g, const cplx* spec) {
  auto ft = freq_table(g);
  double s = 0.0;
  for (std::size_t m = 0; m < g.modes(); ++m) s += ft->weight[m] * std::norm(spec[m]);
  const double np = static_cast<double>(g.points());
  return s * g.volume() / (np * np);
}

double inner(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("inner: grid mismatch");
  double s = 0.0;
  auto va = a.values(), vb = b.values();
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  return s * a.grid().cell_volume();
}

Field pointwise(const Field& u, int out_n, const std::function<void(const double*, double*)>& f) {
  const GridSpec& g = u.grid();
  const std::size_t np = g.points();
  Field out(g.with_components(out_n));
  auto ov = out.mutable_values();
  auto iv = u.values();
  std::vector<double> in(g.n), res(out_n);
  for (std::size_t p = 0; p < np; ++p) {
    for (int c = 0; c < g.n; ++c) in[c] = iv[c * np + p];
    f(in.data(), res.data());
    for (int c = 0; c < out_n; ++c) ov[c * np + p] = res[c];
  }
  return out;
}

Field product(const Field& a, const Field& b) {
  if (!a.grid().same_mesh(b.grid())) throw InvalidArgument("product: mesh mismatch");
  if (a.components() != 1 && a.components() != b.components())
    throw InvalidArgument("product: component mismatch");
  const std::size_t np = a.points();
  Field out(b.grid());
  auto ov = out.mutable_values();
  auto av = a.values(), bv = b.values();
  for (int c = 0; c < b.components(); ++c) {
    const std::size_t ao = a.components() == 1 ? 0 : c * np;
    for (std::size_t p = 0; p < np; ++p) ov[c * np + p] = av[ao + p] * bv[c * np + p];
  }
  return out;
}

}  // namespace hypar

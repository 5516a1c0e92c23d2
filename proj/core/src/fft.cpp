#include "hypar/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace hypar::fft {
namespace {

struct Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
};

std::mutex& plan_mutex() {
  static std::mutex mu;
  return mu;
}

// Plans are created once per (d, N) and executed through the new-array
// interface, which is thread safe.
const Plans& plans_for(int d, int N) {
  static std::map<std::pair<int, int>, Plans> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_pair(d, N);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<int> dims(d, N);
  GridSpec g{d, N, 1.0, 1};
  double* r = fftw_alloc_real(g.points());
  fftw_complex* c = fftw_alloc_complex(g.modes());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  Plans p;
  p.fwd = fftw_plan_dft_r2c(d, dims.data(), r, c, flags);
  p.inv = fftw_plan_dft_c2r(d, dims.data(), c, r, flags);
  fftw_free(r);
  fftw_free(c);
  return cache.emplace(key, p).first->second;
}

}  // namespace

void forward(const GridSpec& g, const double* in, cplx* out) {
  const Plans& p = plans_for(g.d, g.N);
  // r2c does not modify its input for out-of-place transforms.
  fftw_execute_dft_r2c(p.fwd, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void inverse(const GridSpec& g, const cplx* in, double* out) {
  const Plans& p = plans_for(g.d, g.N);
  std::vector<cplx> tmp(in, in + g.modes());
  fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(tmp.data()), out);
  const double scale = 1.0 / static_cast<double>(g.points());
  const std::size_t np = g.points();
  for (std::size_t i = 0; i < np; ++i) out[i] *= scale;
}

}  // namespace hypar::fft

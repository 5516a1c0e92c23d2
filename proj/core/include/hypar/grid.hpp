#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <vector>

namespace hypar {

using cplx = std::complex<double>;

// Periodic box [0,L)^d sampled on N^d points, carrying n components.
// Arrays are row-major with the last axis fastest.
struct GridSpec {
  int d = 1;
  int N = 64;
  double L = 2.0 * std::numbers::pi;
  int n = 1;

  std::size_t points() const;
  std::size_t modes() const;  // half-spectrum size N^{d-1}(N/2+1)
  double dx() const { return L / N; }
  double k0() const { return 2.0 * std::numbers::pi / L; }
  double nyquist() const { return k0() * (N / 2); }
  double cell_volume() const;
  double volume() const;

  GridSpec with_components(int ncomp) const;
  GridSpec with_resolution(int newN) const;
  bool same_mesh(const GridSpec& o) const { return d == o.d && N == o.N && L == o.L; }
  bool operator==(const GridSpec& o) const { return same_mesh(o) && n == o.n; }

  void validate() const;
};

// Frequencies of the half spectrum, cached per mesh.
struct FreqTable {
  int d = 1;
  int N = 0;
  std::size_t modes = 0;
  std::vector<int> k;          // integer wavevector, d per mode
  std::vector<double> xi;      // physical angular frequency, d per mode
  std::vector<double> abs_xi;  // |xi|
  std::vector<double> weight;  // Hermitian multiplicity (1 or 2)
  std::vector<std::uint8_t> nyq_mask;  // bit a set when |k_a| = N/2
  double max_abs_xi = 0.0;

  const double* xi_of(std::size_t m) const { return xi.data() + m * d; }
  const int* k_of(std::size_t m) const { return k.data() + m * d; }
};

std::shared_ptr<const FreqTable> freq_table(const GridSpec& g);

}  // namespace hypar

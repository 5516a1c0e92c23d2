#pragma once

#include <functional>
#include <vector>

#include "hypar/field.hpp"

namespace hypar {

// d*n components, ordering c*d + alpha.
Field spectral_gradient(const Field& u);
Field spectral_derivative(const Field& u, int alpha);
Field spectral_second_derivative(const Field& u, int alpha, int beta);

// Per-mode real multiplier applied to every component.
Field apply_multiplier(const Field& u, const std::vector<double>& mult);

// 2/3-rule truncation: drops modes with |k_a| > N/3 in any direction.
Field dealias(const Field& u);
void dealias_spectrum(const GridSpec& g, cplx* spec);
std::vector<double> dealias_mask(const GridSpec& g);

// Spectral interpolation onto an M^d grid. Modes at the source Nyquist are dropped.
Field resample(const Field& u, int M);
double upsampled_linf(const Field& u, int factor = 2);

// Box inner product and squared L2 norm through the half-spectrum Parseval identity.
double parseval_sq(const GridSpec& g, const cplx* spec);
double inner(const Field& a, const Field& b);

// Pointwise map of the state vector; result has out_n components.
Field pointwise(const Field& u, int out_n,
                const std::function<void(const double* in, double* out)>& f);
Field product(const Field& a, const Field& b);  // componentwise, same n or scalar a

}  // namespace hypar

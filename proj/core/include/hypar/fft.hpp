#pragma once

#include "hypar/grid.hpp"

namespace hypar::fft {

// Unnormalized forward r2c transform of one component.
void forward(const GridSpec& g, const double* in, cplx* out);
// Inverse c2r transform, normalized by N^d. Input is not modified.
void inverse(const GridSpec& g, const cplx* in, double* out);

}  // namespace hypar::fft

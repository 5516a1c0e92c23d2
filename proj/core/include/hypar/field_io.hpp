#pragma once

#include <string>

#include "hypar/field.hpp"

namespace hypar {

// Binary layout: "HPFD", u32 version, u32 d, u32 N, u32 n, f64 L, then
// n*N^d little-endian f64 values, component-major.
void write_field(const Field& u, const std::string& path);
Field read_field(const std::string& path);

// One row per sample along `axis`, other coordinates fixed at index 0.
void write_slice_csv(const Field& u, const std::string& path, int axis = 0);

}  // namespace hypar

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "hypar/besov.hpp"
#include "hypar/fft.hpp"
#include "hypar/propagators.hpp"
#include "hypar/solver.hpp"
#include "hypar/systems.hpp"

using namespace hypar;

namespace {

constexpr double kPi = std::numbers::pi;

GridSpec grid_for(benchmark::State& st, int n = 1) {
  return GridSpec{static_cast<int>(st.range(0)), static_cast<int>(st.range(1)), 2 * kPi, n};
}

Field smooth(const GridSpec& g) {
  Field f(g);
  auto v = f.mutable_values();
  const std::size_t pts = g.points();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = 2 * kPi * static_cast<double>(i % pts) / static_cast<double>(pts);
    v[i] = std::exp(std::sin(x)) - 1.2 + 0.1 * static_cast<double>(i / pts);
  }
  return f;
}

void BM_fft_roundtrip(benchmark::State& st) {
  GridSpec g = grid_for(st);
  Field u = smooth(g);
  std::vector<cplx> spec(g.modes());
  std::vector<double> back(g.points());
  for (auto _ : st) {
    fft::forward(g, u.values().data(), spec.data());
    fft::inverse(g, spec.data(), back.data());
    benchmark::DoNotOptimize(back.data());
  }
}

void BM_besov_norm(benchmark::State& st) {
  Field u = smooth(grid_for(st));
  for (auto _ : st) benchmark::DoNotOptimize(besov(u, 1.0));
}

void BM_parabolic_apply(benchmark::State& st) {
  GridSpec g = grid_for(st);
  ParabolicPropagator prop(ConstantParabolicOp::heat(g.d), g);
  Field u = smooth(g);
  for (auto _ : st) benchmark::DoNotOptimize(prop.apply(u, 0.01));
}

void BM_nonlinear_rhs(benchmark::State& st) {
  GridSpec g = grid_for(st, static_cast<int>(st.range(0)) + 1);
  auto spec = assemble_barotropic(g.d, gamma_law(1.0, 2.0, 1.0, 0.0));
  Field V = smooth(g);
  V *= 0.01;
  for (auto _ : st) benchmark::DoNotOptimize(nonlinear_rhs(spec, V));
}

}  // namespace

BENCHMARK(BM_fft_roundtrip)->Args({1, 256})->Args({1, 4096})->Args({2, 64})->Args({2, 256});
BENCHMARK(BM_besov_norm)->Args({1, 1024})->Args({2, 128});
BENCHMARK(BM_parabolic_apply)->Args({1, 1024})->Args({2, 128});
BENCHMARK(BM_nonlinear_rhs)->Args({1, 256})->Args({2, 64});
BENCHMARK_MAIN();

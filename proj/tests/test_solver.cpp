#include <doctest.h>

#include "hypar/besov.hpp"
#include "hypar/errors.hpp"
#include "hypar/filter.hpp"
#include "hypar/solver.hpp"
#include "hypar/spectral.hpp"
#include "support.hpp"

using namespace hypar;
using namespace hypar::test;

namespace {

SystemSpec baro(int d) { return assemble_barotropic(d, gamma_law(1.0, 2.0, 1.0, 0.0)); }

Field small_data(int N, double amp) {
  GridSpec g{1, N, 2 * pi, 2};
  return sample(g, [&](int c, const double* x) {
    return c == 0 ? amp * (std::cos(x[0]) + 0.5 * std::sin(2 * x[0])) : amp * (0.7 * std::sin(x[0]) - 0.3 * std::cos(2 * x[0]));
  });
}

double scalar_root(double a, double rate, double target) {
  double lo = 0.0, hi = target;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (mid + (1 - std::exp(-rate * mid)) * a <= target ? lo : hi) = mid;
  }
  return lo;
}

const HypothesisStatus* find(const std::vector<HypothesisStatus>& hs, const std::string& name) {
  for (const auto& h : hs)
    if (h.name == name) return &h;
  return nullptr;
}

}  // namespace

TEST_CASE("compute_T0") {
  GridSpec g{1, 64, 2 * pi, 1};
  SUBCASE("zero data") { CHECK(compute_T0(Field(g), 1.0, 0.3, 2.0, 1.5) == 0.3 * 0.3 / 1.5); }
  SUBCASE("single block data") {
    Field u = cos_mode(g, 6, 0.02);
    const double s = 1.0, eta = 0.4, c = 0.5625, C = 2.0;
    const double a = 4.0 * 0.02 * std::sqrt(pi);
    const double expected = scalar_root(a, c * 16.0, eta * eta / C);
    CHECK(std::abs(compute_T0(u, s, eta, c, C) - expected) <= 1e-10 * expected);
  }
  SUBCASE("monotone in eta") {
    Field u = cos_mode(g, 3, 0.1) + cos_mode(g, 11, 0.05);
    double prev = 0.0;
    for (double eta : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      double t = compute_T0(u, 1.0, eta, 0.5, 1.0);
      CHECK(t >= prev);
      prev = t;
    }
  }
  SUBCASE("invalid input") {
    CHECK_THROWS_AS(compute_T0(Field(g), 1.0, 1.5, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(compute_T0(Field(g), 1.0, 0.5, 0.0, 1.0), InvalidArgument);
  }
}

TEST_CASE("zero is a fixed point") {
  auto spec = baro(1);
  IterationConfig cfg;
  cfg.p_max = 3;
  auto res = iterate_subcritical(spec, Field(GridSpec{1, 32, 2 * pi, 2}), cfg);
  for (const auto& f : res.V.fields()) CHECK(f.is_zero());
  for (const auto& it : res.diag.iterations) {
    CHECK(it.X == 0.0);
    for (const auto& h : it.hypotheses)
      if (h.name != "H5") CHECK(h.value == 0.0);
  }
  CHECK(res.diag.status == "converged");
}

TEST_CASE("small data iteration") {
  auto spec = baro(1);
  Field V0 = small_data(64, 0.01);
  IterationConfig cfg;
  cfg.p_max = 12;
  cfg.contraction_tol = 1e-10;
  auto res = iterate_subcritical(spec, V0, cfg);
  CHECK(res.diag.status == "converged");
  CHECK(res.diag.max_ratio(2) <= 0.9);
  CHECK(res.diag.residual_monotone_to_floor());
  CHECK(res.T == doctest::Approx(res.diag.constants.at("T")));

  SUBCASE("splitting is exact") {
    Trajectory V2 = res.V.components(1, 1);
    ParabolicPropagator prop(ConstantParabolicOp::from_system(spec), V2.grid());
    auto split = split_parabolic(V2, V2.field(0), prop);
    CHECK(split.V_S.field(0).l2() == 0.0);
    for (std::size_t i = 0; i < V2.size(); ++i) {
      Field sum = split.V2_L.field(i) + split.V_S.field(i);
      CHECK((sum - V2.field(i)).l2() <= 1e-10 * V2.field(i).l2());
    }
  }

  SUBCASE("data truncation does not increase the norm") {
    for (int p = 0; p < 8; ++p) {
      Field trunc = low_freq_cutoff(V0, p, Flavor::nonhomogeneous);
      CHECK(besov(trunc, 2.0) <= besov(V0, 2.0) * (1 + 1e-14));
    }
  }
}

TEST_CASE("a horizon far beyond T0 breaks H2") {
  auto spec = baro(1);
  Field V0 = small_data(64, 0.05);
  IterationConfig cfg;
  cfg.eta = 0.2;
  cfg.p_max = 1;
  auto base = iterate_subcritical(spec, V0, cfg);
  const auto* ok = find(base.diag.iterations.back().hypotheses, "H2");
  REQUIRE(ok != nullptr);
  CHECK(ok->pass);

  cfg.T = 10 * base.T;
  auto res = iterate_subcritical(spec, V0, cfg);
  const auto* h2 = find(res.diag.iterations.back().hypotheses, "H2");
  REQUIRE(h2 != nullptr);
  CHECK_FALSE(h2->pass);
  CHECK(h2->margin() < 0.0);
  CHECK(res.diag.status == "hypothesis-failure");
}

TEST_CASE("nonlinear right-hand side") {
  auto spec = baro(1);
  GridSpec g{1, 32, 2 * pi, 2};
  CHECK(nonlinear_rhs(spec, Field(g)).linf() == 0.0);
  // a constant velocity only advects: d_t rho = -u d_x rho
  Field V = sample(g, [](int c, const double* x) { return c == 0 ? 0.1 * std::sin(x[0]) : 0.3; });
  Field r = nonlinear_rhs(spec, V);
  Field exact = sample(g.with_components(1), [](int, const double* x) { return -0.3 * 0.1 * std::cos(x[0]); });
  CHECK((r.component_field(0) - exact).linf() <= 1e-12);
}

TEST_CASE("critical path") {
  auto spec = baro(2);
  SUBCASE("zero data") {
    GridSpec g{2, 32, 2 * pi, 3};
    IterationConfig cfg;
    cfg.T = 0.05;
    cfg.dt = 0.01;
    auto res = solve_critical(spec, Field(g), cfg);
    CHECK(res.m == 0);
    for (const auto& f : res.V.fields()) CHECK(f.is_zero());
    for (const auto& h : res.diag.iterations.back().hypotheses) CHECK_MESSAGE(h.pass, h.name);
  }
  SUBCASE("one dimension rejected") {
    IterationConfig cfg;
    CHECK_THROWS_AS(solve_critical(baro(1), small_data(32, 0.01), cfg), InvalidArgument);
  }
  SUBCASE("tail shrinks as m grows") {
    GridSpec g{2, 32, 2 * pi, 1};
    Field u = sample(g, [](int, const double* x) { return std::exp(std::cos(x[0]) + std::sin(x[1])) - 1.5; });
    const int m = critical_m(u, 0.01);
    auto tail = [&](int mm) { return besov(u - low_freq_cutoff(u, mm, Flavor::homogeneous), 1.0, 1.0, Flavor::homogeneous); };
    CHECK(tail(m) <= 0.5 * std::sqrt(0.01) * (1 + 1e-12));
    CHECK(tail(m + 1) <= tail(m));
    CHECK(tail(2 * m + 1) <= tail(m));
  }
}

TEST_CASE("continuation monitor") {
  auto spec = baro(1);
  GridSpec g{1, 32, 2 * pi, 2};
  Trajectory tr;
  for (int i = 0; i <= 4; ++i) tr.push(0.1 * i, Field(g));
  auto mon = continuation_monitor(tr, spec);
  for (double v : mon.integral) CHECK(v <= 1e-14);
  for (double v : mon.sup_grad_v1) CHECK(v <= 1e-14);
}

TEST_CASE("continuous dependence at zero perturbation size") {
  auto spec = baro(1);
  Field V0 = small_data(32, 0.01);
  Field w = sample(V0.grid(), [](int, const double* x) { return std::sin(3 * x[0]); });
  IterationConfig cfg;
  cfg.p_max = 8;
  cfg.contraction_tol = 1e-10;
  auto rep = continuous_dependence_experiment(spec, V0, w, {0.0}, cfg);
  REQUIRE(rep.entries.size() == 1);
  CHECK(rep.entries[0].sup_weak == 0.0);
}

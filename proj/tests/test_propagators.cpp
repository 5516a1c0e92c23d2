#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "hypar/errors.hpp"
#include "hypar/propagators.hpp"
#include "hypar/spectral.hpp"
#include "support.hpp"

using namespace hypar;
using namespace hypar::test;

namespace {

Field full(const SystemSpec& spec, const GridSpec& g, const std::function<double(int, const double*)>& dv) {
  GridSpec gn = g.with_components(spec.n());
  return sample(gn, [&](int c, const double* x) { return spec.U_bar[c] + dv(c, x); });
}

SystemSpec baro1() { return assemble_barotropic(1, gamma_law(1.0, 2.0, 1.0, 0.0)); }

}  // namespace

TEST_CASE("constant parabolic propagator") {
  GridSpec g{1, 64, 2 * pi, 1};
  auto op = ConstantParabolicOp::heat(1);

  SUBCASE("heat kernel on a single mode") {
    Field v0 = cos_mode(g, 5, 0.7);
    auto tr = solve_constant_parabolic(v0, op, 0.1, 10);
    REQUIRE(tr.size() == 11);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      Field exact = std::exp(-25.0 * tr.time(i)) * v0;
      CHECK((tr.field(i) - exact).linf() <= 1e-12);
    }
  }

  SUBCASE("zero data") { CHECK(solve_constant_parabolic(Field(g), op, 1.0, 4).back().is_zero()); }

  SUBCASE("semigroup and energy decay") {
    Field v0 = sample(g, [](int, const double* x) { return std::exp(std::sin(x[0])) - 1.2; });
    ParabolicPropagator prop(op, g);
    Field once = prop.apply(v0, 0.3);
    Field twice = prop.apply(prop.apply(v0, 0.15), 0.15);
    CHECK((once - twice).l2() <= 1e-12 * v0.l2());
    auto tr = solve_constant_parabolic(v0, op, 0.5, 20);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.field(i).l2() <= tr.field(i - 1).l2() * (1 + 1e-14));
  }

  SUBCASE("non-positive S_bar rejected") {
    auto bad = op;
    bad.S_bar(0, 0) = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  }
}

TEST_CASE("viscous block of the full gas system") {
  auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, 0.0, 1.0});
  auto op = ConstantParabolicOp::from_system(spec);
  REQUIRE(op.n2 == 3);
  for (double k : {1.0, 2.0, 3.0}) {
    const double xi[2] = {k, 0.0};
    Mat sym = op.S_bar.inverse() * op.symbol(xi);
    Eigen::EigenSolver<Mat> es(sym);
    std::vector<double> ev;
    for (int i = 0; i < 3; ++i) ev.push_back(es.eigenvalues()[i].real());
    std::sort(ev.begin(), ev.end());
    CHECK(ev[0] == doctest::Approx(k * k).epsilon(1e-12));
    CHECK(ev[1] == doctest::Approx(k * k).epsilon(1e-12));
    CHECK(ev[2] == doctest::Approx(2 * k * k).epsilon(1e-12));
  }
  GridSpec g{2, 16, 2 * pi, 3};
  ParabolicPropagator prop(op, g);
  // transverse velocity decays at mu |xi|^2, longitudinal at nu |xi|^2
  Field ut = sample(g, [](int c, const double* x) { return c == 1 ? std::cos(2 * x[0]) : 0.0; });
  Field ul = sample(g, [](int c, const double* x) { return c == 0 ? std::cos(2 * x[0]) : 0.0; });
  CHECK((prop.apply(ut, 0.1) - std::exp(-4 * 0.1) * ut).linf() <= 1e-12);
  CHECK((prop.apply(ul, 0.1) - std::exp(-8 * 0.1) * ul).linf() <= 1e-12);
}

TEST_CASE("hyperbolic stepper") {
  auto spec = baro1();
  GridSpec g{1, 64, 2 * pi, 1};
  const double a = 0.4, k = 3.0, dt = 0.01;
  Field U = full(spec, g, [&](int c, const double*) { return c == 1 ? a : 0.0; });
  FrozenCoeffStep step{Scheme::rk4, dt, 0.5};

  SUBCASE("constant advection phase") {
    Field v = cos_mode(g, 3);
    Field zero(g);
    Field out = step_linear_hyperbolic(v, spec, U, zero, step);
    Field exact = sample(g, [&](int, const double* x) { return std::cos(k * (x[0] - a * dt)); });
    // local error of RK4 on a pure phase is (a k dt)^5 / 120
    CHECK((out - exact).linf() <= 2 * std::pow(a * k * dt, 5) / 120);
    CHECK(out.l2() == doctest::Approx(v.l2()).epsilon(std::pow(a * k * dt, 4)));
  }

  SUBCASE("zero in, zero out") {
    Field zero(g);
    CHECK(step_linear_hyperbolic(zero, spec, U, zero, step).is_zero());
  }

  SUBCASE("cfl violation reports the admissible step") {
    HyperbolicOperator op(spec, U);
    FrozenCoeffStep big{Scheme::rk4, 10.0, 0.5};
    try {
      step_linear_hyperbolic(Field(g), op, Field(g), Field(g), Field(g), big);
      FAIL("expected CflError");
    } catch (const CflError& e) {
      CHECK(e.admissible_dt() == doctest::Approx(0.5 * g.dx() / a));
    }
  }
}

TEST_CASE("variable parabolic stepper") {
  auto spec = baro1();
  GridSpec g{1, 64, 2 * pi, 1};
  FrozenCoeffStep step{Scheme::integrating_factor, 0.01, 0.5};

  SUBCASE("frozen at the reference state matches the exact propagator") {
    Field U = full(spec, g, [](int, const double*) { return 0.0; });
    Field v = sample(g, [](int, const double* x) { return std::sin(x[0]) + 0.3 * std::cos(4 * x[0]); });
    Field out = step_linear_parabolic_variable(v, spec, U, Field(g), step);
    auto exact = ParabolicPropagator(ConstantParabolicOp::from_system(spec), g).apply(v, step.dt);
    CHECK((out - exact).linf() <= 1e-12);
  }

  SUBCASE("zero in, zero out") {
    Field U = full(spec, g, [](int c, const double* x) { return c == 0 ? 0.1 * std::sin(x[0]) : 0.0; });
    CHECK(step_linear_parabolic_variable(Field(g), spec, U, Field(g), step).linf() == 0.0);
  }

  SUBCASE("phase exit rejected") {
    Field U = full(spec, g, [](int c, const double*) { return c == 0 ? -2.0 : 0.0; });
    CHECK_THROWS_AS(step_linear_parabolic_variable(Field(g), spec, U, Field(g), step), PhaseError);
  }
}

TEST_CASE("smoothing estimates on the heat propagator") {
  GridSpec g{1, 128, 2 * pi, 1};
  auto op = ConstantParabolicOp::heat(1);
  const double T = 0.02, h = 0.02;

  SUBCASE("rates inside the annulus envelope") {
    Field v0 = cos_mode(g, 3) + cos_mode(g, 6, 0.5) + cos_mode(g, 11, 0.25);
    auto tr = solve_constant_parabolic(v0, op, T + h, 400);
    auto rep = verify_smoothing_estimates(tr, op, 0.5, T, h);
    CHECK(rep.pass);
    CHECK(rep.C0 == doctest::Approx(1.0));
    int fitted = 0;
    for (const auto& b : rep.blocks) {
      if (b.vacuous || b.rate == 0.0) continue;
      ++fitted;
      CHECK(b.rate >= 0.5625 * std::ldexp(1.0, 2 * b.j));
      CHECK(b.rate <= 64.0 / 9.0 * std::ldexp(1.0, 2 * b.j));
    }
    CHECK(fitted >= 3);
  }

  SUBCASE("single block data leaves the others vacuous") {
    auto tr = solve_constant_parabolic(cos_mode(g, 6), op, T + h, 100);
    auto rep = verify_smoothing_estimates(tr, op, 0.0, T, h);
    CHECK(rep.pass);
    for (const auto& b : rep.blocks)
      if (b.j != 2) CHECK(b.vacuous);
  }
}

TEST_CASE("ode lemma") {
  std::vector<double> t;
  for (int i = 0; i <= 1000; ++i) t.push_back(i / 1000.0);

  SUBCASE("constant") {
    std::vector<double> X(t.size(), 2.0), A(t.size(), 0.0);
    auto rep = verify_ode_lemma(t, X, A, 0.0);
    CHECK(rep.pass());
    CHECK(std::abs(rep.conclusion_defect) <= 1e-12);
  }

  SUBCASE("equality case") {
    // 1/2 X' = A X^{1/2} exactly
    std::vector<double> X, A(t.size(), 0.5);
    for (double s : t) X.push_back((1 + s / 2) * (1 + s / 2));
    auto rep = verify_ode_lemma(t, X, A, 0.0);
    CHECK(rep.pass());
    CHECK(std::abs(rep.conclusion_defect) <= 1e-8);
  }

  SUBCASE("exponential decay") {
    const double B = 1.5;
    std::vector<double> X, A(t.size(), 0.0);
    for (double s : t) X.push_back(4.0 * std::exp(-2 * B * s));
    CHECK(verify_ode_lemma(t, X, A, B).pass());
  }

  SUBCASE("hypothesis violated") {
    std::vector<double> X, A(t.size(), 0.0);
    for (double s : t) X.push_back(1 + s);
    auto rep = verify_ode_lemma(t, X, A, 0.0);
    CHECK_FALSE(rep.hypothesis_ok);
    CHECK_FALSE(rep.conclusion_checked);
  }
}

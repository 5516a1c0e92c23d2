#include <doctest.h>

#include <random>

#include "hypar/errors.hpp"
#include "hypar/systems.hpp"

using namespace hypar;

namespace {

Vec state(std::initializer_list<double> v) {
  Vec u(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) u(i++) = x;
  return u;
}

// Two hyperbolic components advected by a 2x2 matrix, one heat component.
SystemSpec toy(double skew) {
  SystemSpec s;
  s.name = "toy";
  s.n1 = 2;
  s.n2 = 1;
  s.d = 1;
  s.U_bar = Vec::Zero(3);
  s.in_phase = [](const double*) { return true; };
  s.phase_distance = [](const double*) { return 1.0; };
  s.phase_distance_1 = [](const double*) { return 1.0; };
  s.S0 = [](const double*, double* M) {
    std::fill(M, M + 9, 0.0);
    M[0] = M[4] = M[8] = 1.0;
  };
  s.Salpha = [skew](const double*, int, double* M) {
    std::fill(M, M + 9, 0.0);
    M[3] = 1.0 + skew;  // (0,1)
    M[1] = 1.0 - skew;  // (1,0)
  };
  s.Z = [](const double*, int, int, double* M) { M[0] = 1.0; };
  s.source = [](const double*, const double*, double* f) { f[0] = f[1] = f[2] = 0.0; };
  return s;
}

std::vector<Vec> nsf_states(int d, std::size_t count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> r(0.5, 2.0), u(-1.0, 1.0);
  std::vector<Vec> out;
  for (std::size_t i = 0; i < count; ++i) {
    Vec U(d + 2);
    U(0) = r(rng);
    for (int a = 0; a < d; ++a) U(1 + a) = u(rng);
    U(d + 1) = r(rng);
    out.push_back(U);
  }
  return out;
}

}  // namespace

TEST_CASE("gas system matrices") {
  auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, 0.0, 1.0});
  const Vec U = state({1.0, 0.0, 0.0, 1.0});
  CHECK((spec.S0_at(U) - Mat::Identity(4, 4)).norm() <= 1e-14);

  for (int a = 0; a < 2; ++a) {
    Mat Sa = spec.Salpha_at(U, a);
    for (int i = 0; i < 4; ++i) CHECK(Sa(i, i) == 0.0);
    // p_rho = R theta = 1 couples density and the velocity along e_a
    CHECK(Sa(0, 1 + a) == doctest::Approx(1.0));
    CHECK(Sa(1 + a, 0) == doctest::Approx(1.0));
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(spec.Z_symbol(U, state({1.0, 0.0})));
  CHECK(es.eigenvalues()(0) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.0));
  CHECK(es.eigenvalues()(2) == doctest::Approx(2.0));

  CHECK_THROWS_AS(assemble_nsf(2, {1.0, 1.0}, {0.0, 0.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(assemble_nsf(2, {1.0, 1.0}, {1.0, -2.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(assemble_nsf(2, {1.0, 1.0}, {1.0, 0.0, -1.0}), InvalidArgument);
}

TEST_CASE("barotropic system") {
  auto law = gamma_law(1.0, 2.0, 1.0, 0.0);
  CHECK(law.dp(1.0) == doctest::Approx(2.0));
  auto spec = assemble_barotropic(1, law);
  CHECK(spec.n1 == 1);
  CHECK(spec.n2 == 1);
  CHECK(spec.profile == AssumptionProfile::C);
  CHECK_FALSE(spec.admits(state({0.0, 0.0})));
  CHECK(spec.admits(state({0.3, 2.0})));
}

TEST_CASE("strong ellipticity") {
  SUBCASE("gas system at theta = 1") {
    auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, 0.0, 1.0});
    auto rep = check_strong_ellipticity(spec, {state({1.0, 0.0, 0.0, 1.0})}, 10000, 1);
    CHECK(rep.ok);
    CHECK(rep.c1_hat == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.exact_min == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("negative lambda") {
    auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, -1.5, 2.0});
    auto rep = check_strong_ellipticity(spec, {state({1.0, 0.0, 0.0, 1.0})}, 10000, 2);
    CHECK(rep.ok);
    CHECK(rep.c1_hat >= 0.5 - 1e-12);
    CHECK(rep.c1_hat <= 0.5 * 1.02);
  }
  SUBCASE("estimate decreases with sample count") {
    auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, -1.5, 2.0});
    const std::vector<Vec> U{state({1.0, 0.0, 0.0, 1.0})};
    CHECK(check_strong_ellipticity(spec, U, 1000, 3).c1_hat <= check_strong_ellipticity(spec, U, 100, 3).c1_hat);
  }
}

TEST_CASE("assumption B") {
  SUBCASE("gas system on a compact range") {
    auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, 0.0, 1.0});
    auto rep = check_assumption_B(spec, nsf_states(2, 200, 4));
    CHECK(rep.pass());
  }
  SUBCASE("skew perturbation is caught") {
    const double skew = 5e-4;
    Mat A(2, 2);
    A << 0.0, 1.0 + skew, 1.0 - skew, 0.0;
    const double expected = (A - A.transpose()).norm();
    auto rep = check_assumption_B(toy(skew), {Vec::Zero(3)});
    CHECK_FALSE(rep.pass());
    auto* it = rep.find("hyperbolic block symmetrizable");
    REQUIRE(it != nullptr);
    CHECK_FALSE(it->pass);
    CHECK(it->residual == doctest::Approx(expected).epsilon(1e-10));
    CHECK(check_assumption_B(toy(0.0), {Vec::Zero(3)}).pass());
  }
  SUBCASE("fully parabolic") {
    auto rep = check_assumption_B(assemble_heat(2, 2), {Vec::Zero(2)});
    CHECK(rep.pass());
    auto* it = rep.find("hyperbolic block symmetrizable");
    REQUIRE(it != nullptr);
    CHECK(it->note.find("vacuous") != std::string::npos);
  }
}

TEST_CASE("assumption C") {
  std::vector<Vec> states;
  for (double r : {0.6, 1.0, 1.7})
    for (double u : {-0.5, 0.0, 0.8}) states.push_back(state({r, u, -u}));

  SUBCASE("constant viscosities") {
    auto rep = check_assumption_C(assemble_barotropic(2, gamma_law(1.0, 1.4, 1.0, 0.5)), states);
    for (const auto& it : rep.items) CHECK_MESSAGE(it.pass, it.name);
  }
  SUBCASE("velocity dependent viscosity") {
    auto law = gamma_law(1.0, 1.4, 1.0, 0.5);
    law.mu = [](double, const double* u) { return 1.0 + u[0] * u[0] + u[1] * u[1]; };
    auto rep = check_assumption_C(assemble_barotropic(2, law), states);
    auto* it = rep.find("4: Z depends on U1 only");
    REQUIRE(it != nullptr);
    CHECK_FALSE(it->pass);
    CHECK(it->residual >= 10 * it->tolerance);
  }
  SUBCASE("zero perturbation rejected") {
    CHECK_THROWS_AS(check_assumption_C(assemble_barotropic(2, gamma_law(1.0, 1.4, 1.0, 0.5)), states, 0.0),
                    InvalidArgument);
  }
}

TEST_CASE("entropy dissipativity") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;

  SUBCASE("no diffusion") {
    std::vector<EntropySample> samples(20, {state({1.0}), state({1.0}), state({1.0})});
    auto rep = check_entropy_dissipativity([](const Vec&) { return Mat::Identity(1, 1); },
                                           [](const Vec&, int, int) { return Mat::Zero(1, 1); }, 1, samples);
    CHECK(rep.vacuous);
    CHECK(rep.pass);
  }

  SUBCASE("scalar heat with quadratic entropy") {
    std::vector<EntropySample> samples;
    for (int i = 0; i < 50; ++i) samples.push_back({state({n01(rng)}), state({n01(rng)}), state({n01(rng)})});
    auto rep = check_entropy_dissipativity([](const Vec&) { return Mat::Identity(1, 1); },
                                           [](const Vec&, int, int) { return Mat::Identity(1, 1); }, 1, samples);
    CHECK(rep.pass);
    CHECK(rep.omega_hat == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("gas system with its symmetrizer as entropy hessian") {
    auto spec = assemble_nsf(2, {1.0, 1.0}, {1.0, 0.0, 1.0});
    auto hess = [&](const Vec& U) { return spec.S0_at(U); };
    auto Bab = [&](const Vec& U, int a, int b) {
      Mat Y = Mat::Zero(4, 4);
      Y.block(1, 1, 3, 3) = spec.Z_at(U, a, b);
      return Mat(spec.S0_at(U).inverse() * Y);
    };
    std::vector<EntropySample> samples;
    for (const Vec& U : nsf_states(2, 200, 7)) {
      Vec xi(2), X(4);
      for (int a = 0; a < 2; ++a) xi(a) = n01(rng);
      for (int i = 0; i < 4; ++i) X(i) = n01(rng);
      samples.push_back({U, xi, X});
    }
    auto rep = check_entropy_dissipativity(hess, Bab, 2, samples);
    CHECK(rep.pass);
    CHECK(rep.omega_hat > 0.0);
  }
}

#include <doctest.h>

#include <random>

#include "hypar/corpus.hpp"
#include "hypar/errors.hpp"
#include "hypar/field_io.hpp"
#include "hypar/filter.hpp"
#include "hypar/spectral.hpp"
#include "support.hpp"

using namespace hypar;
using namespace hypar::test;

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(GridSpec({1, 4, 1.0, 1}).validate(), InvalidArgument);
  CHECK_THROWS_AS(GridSpec({1, 48, 1.0, 1}).validate(), InvalidArgument);
  CHECK_THROWS_AS(GridSpec({4, 16, 1.0, 1}).validate(), InvalidArgument);
  CHECK_NOTHROW(GridSpec({2, 32, 3.0, 2}).validate());
  GridSpec g{2, 32, 3.0, 2};
  CHECK(g.points() == 1024);
  CHECK(g.modes() == 32 * 17);
}

TEST_CASE("fft round trip") {
  GridSpec g{2, 16, 2 * pi, 1};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> v(g.points());
  for (auto& x : v) x = n01(rng);
  Field u(g, v);
  Field w = Field::from_spectrum(g, u.spectrum());
  for (std::size_t p = 0; p < g.points(); ++p) CHECK(w.at(0, p) == doctest::Approx(v[p]).epsilon(1e-13));
}

TEST_CASE("filter bank") {
  GridSpec g{1, 64, 2 * pi, 1};
  FilterBank fb(g);
  CHECK(fb.j_max() == static_cast<int>(std::floor(std::log2(32 * 3.0 / 8.0))));
  CHECK(fb.j_min() == -4);

  SUBCASE("profile values") {
    CHECK(chi_profile(0.0) == 1.0);
    CHECK(chi_profile(0.75) == 1.0);
    CHECK(chi_profile(4.0 / 3.0) == 0.0);
    CHECK(phi_profile(0.0) == 0.0);
    for (double r = 0.0; r < 0.75; r += 0.01) CHECK(phi_profile(r) == 0.0);
    for (double r = 4.0 / 3.0; r <= 1.5; r += 0.01) CHECK(phi_profile(r) == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("partition on random frequencies") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 400.0);
    for (int i = 0; i < 1000; ++i) {
      const double r = U(rng);
      double sum = chi_profile(r);
      for (int j = 0; j < 12; ++j) sum += phi_profile(std::ldexp(r, -j));
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }

  SUBCASE("partition on the grid") {
    GridSpec g2{2, 64, 2 * pi, 1};
    FilterBank f2(g2);
    auto ft = freq_table(g2);
    const double guard = g2.nyquist() * 3.0 / 8.0;
    for (std::size_t m = 0; m < ft->modes; ++m) {
      if (ft->abs_xi[m] > guard) continue;
      double sum = f2.chi_hat()[m];
      for (int j = 0; j <= f2.j_top(); ++j) sum += f2.phi_hat(j)[m];
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }

  SUBCASE("too coarse") { CHECK_THROWS_AS(FilterBank(GridSpec{1, 8, 2 * pi * 16, 1}), InvalidArgument); }
}

TEST_CASE("dyadic blocks") {
  GridSpec g{1, 64, 2 * pi, 1};
  SUBCASE("zero field") {
    Field z(g);
    for (int j = -1; j <= 4; ++j) CHECK(dyadic_block(z, {j}).is_zero());
  }
  SUBCASE("single mode sits in one block") {
    // phi(2^-2 xi) = 1 for |xi| in [16/3, 6]
    Field u = cos_mode(g, 6);
    CHECK((dyadic_block(u, {2}) - u).l2() <= 1e-13 * u.l2());
    for (int j : {-1, 0, 4}) CHECK(dyadic_block(u, {j}).l2() <= 1e-13 * u.l2());
    CHECK(dyadic_block(u, {2, Flavor::homogeneous}).l2() == doctest::Approx(u.l2()).epsilon(1e-13));
  }
  SUBCASE("constants live in the low block") {
    Field c(g, std::vector<double>(64, 2.5));
    CHECK((dyadic_block(c, {-1}) - c).l2() <= 1e-13 * c.l2());
    for (int j = 0; j <= 4; ++j) CHECK(dyadic_block(c, {j}).l2() <= 1e-13);
    CHECK(dyadic_block(c, {-3}).is_zero());
  }
  SUBCASE("almost orthogonality and idempotence") {
    auto corpus = make_corpus(g, 5, {4, 1.0});
    for (const auto& u : corpus.fields) {
      for (int j = 0; j <= 3; ++j) {
        Field dj = dyadic_block(u, {j});
        CHECK(dyadic_block(dj, {j + 2}).l2() <= 1e-12 * std::max(u.l2(), 1e-300));
        Field near = dyadic_block(dj, {j - 1}) + dyadic_block(dj, {j}) + dyadic_block(dj, {j + 1});
        CHECK((near - dj).l2() <= 1e-12 * u.l2());
      }
    }
  }
}

TEST_CASE("low frequency cutoff") {
  GridSpec g{1, 64, 2 * pi, 1};
  Field u = cos_mode(g, 6);
  CHECK((low_freq_cutoff(u, 10, Flavor::homogeneous) - u).l2() <= 1e-13 * u.l2());
  CHECK(low_freq_cutoff(u, 1, Flavor::homogeneous).l2() <= 1e-13 * u.l2());
  CHECK(low_freq_cutoff(Field(g), 2, Flavor::nonhomogeneous).is_zero());
}

TEST_CASE("reconstruction over the corpus") {
  for (int d : {1, 2}) {
    GridSpec g{d, d == 1 ? 128 : 32, 2 * pi, 1};
    auto corpus = make_corpus(g, 17, {5, 1.0});
    auto fb = filter_bank(g);
    for (const auto& u : corpus.fields) {
      Field sum(g);
      for (int j : fb->blocks(Flavor::nonhomogeneous)) sum += dyadic_block(u, {j});
      CHECK((sum - u).l2() <= 1e-10 * u.l2());
    }
  }
}

TEST_CASE("spectral derivatives") {
  GridSpec g{1, 32, 3.0, 1};
  Field c(g, std::vector<double>(32, 1.0));
  CHECK(spectral_gradient(c).linf() <= 1e-14);

  Field s = sample(g, [&](int, const double* x) { return std::sin(2 * pi * x[0] / 3.0); });
  Field ds = spectral_gradient(s);
  Field exact = sample(g, [&](int, const double* x) { return 2 * pi / 3.0 * std::cos(2 * pi * x[0] / 3.0); });
  CHECK((ds - exact).linf() <= 1e-12 * exact.linf());

  GridSpec g2{2, 32, 2 * pi, 2};
  Field u = sample(g2, [](int c, const double* x) { return std::sin(x[0] + 2 * x[1] + c) * std::cos(3 * x[1]); });
  Field a = spectral_derivative(spectral_derivative(u, 0), 1);
  Field b = spectral_derivative(spectral_derivative(u, 1), 0);
  CHECK((a - b).linf() <= 1e-12 * a.linf());
  CHECK((spectral_second_derivative(u, 0, 1) - a).linf() <= 1e-12 * a.linf());
  CHECK(spectral_gradient(u).components() == 4);
}

TEST_CASE("resample keeps band-limited fields") {
  GridSpec g{2, 32, 2 * pi, 1};
  auto corpus = make_corpus(g, 2, {3, 1.0});
  for (const auto& u : corpus.fields) {
    Field up = resample(u, 64);
    Field back = resample(up, 32);
    CHECK((back - u).l2() <= 1e-12 * u.l2());
    CHECK(up.l2() == doctest::Approx(u.l2()).epsilon(1e-12));
  }
}

TEST_CASE("field io round trip") {
  GridSpec g{2, 16, 1.5, 2};
  Field u = sample(g, [](int c, const double* x) { return c + std::sin(x[0]) * x[1]; });
  const std::string path = "spectral_core_io.hpfd";
  write_field(u, path);
  Field v = read_field(path);
  CHECK(v.grid() == g);
  CHECK((v - u).linf() == 0.0);
  std::remove(path.c_str());
}

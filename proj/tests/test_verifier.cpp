#include <doctest.h>

#include "hypar/besov.hpp"
#include "hypar/corpus.hpp"
#include "hypar/filter.hpp"
#include "hypar/spectral.hpp"
#include "hypar/verifier.hpp"
#include "support.hpp"

using namespace hypar;
using namespace hypar::test;

namespace {

Corpus custom(const GridSpec& g, std::vector<Field> fields) {
  Corpus c;
  c.grid = g;
  c.seed = 1;
  c.band = 3 * g.N / 16;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    c.labels.push_back("u" + std::to_string(i));
    c.family.push_back(CorpusFamily::bump);
  }
  c.fields = std::move(fields);
  return c;
}

const InequalityReport& named(const std::vector<InequalityReport>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return r;
  FAIL("missing report " << name);
  return rs.front();
}

}  // namespace

TEST_CASE("constant fitting") {
  InequalityReport r;
  r.instances = {{"a", 1.0, 2.0, 2.0}, {"b", 3.0, 1.0, 1.0}, {"c", 0.0, 0.0, 1.0}};
  fit_constant(r);
  CHECK(r.C == 3.0);
  CHECK(r.violations.empty());
  CHECK(r.pass());

  r.instances.push_back({"d", 1e-3, 0.0, 1.0});
  fit_constant(r);
  CHECK(r.violations.size() == 1);
  CHECK_FALSE(r.pass());

  InequalityReport a, b;
  a.C = 1.0;
  b.C = 1.2;
  compare_resolutions(a, b);
  CHECK(a.stable);
  b.C = 1.5;
  compare_resolutions(a, b);
  CHECK_FALSE(a.stable);
  CHECK(a.variation == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("corpus") {
  GridSpec g{1, 64, 2 * pi, 1};
  auto c = make_corpus(g, 42, {6, 0.5});
  CHECK(c.size() == 18);
  CHECK(c.band == 12);
  for (const auto& u : c.fields) {
    CHECK(u.linf() == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(top_annulus_energy(u) <= 1e-20);
  }
  auto again = make_corpus(g, 42, {6, 0.5});
  for (std::size_t i = 0; i < c.size(); ++i) CHECK((c.fields[i] - again.fields[i]).linf() == 0.0);

  auto fine = c.at_resolution(128);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(fine.fields[i].l2() == doctest::Approx(c.fields[i].l2()).epsilon(1e-12));
    CHECK(besov(fine.fields[i], 0.5) == doctest::Approx(besov(c.fields[i], 0.5)).epsilon(1e-12));
  }
  CHECK(c.subset(CorpusFamily::pure_mode).size() == 6);
}

TEST_CASE("scaling invariance of fitted constants") {
  GridSpec g{1, 64, 2 * pi, 1};
  auto c = make_corpus(g, 3, {4, 1.0});
  auto a = verify_product_law(c, 0.25);
  auto b = verify_product_law(c.scaled(0.01), 0.25);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(rel(a[i].C, b[i].C) <= 1e-10);
  auto ca = verify_composition(c, map_identity(), 0.5);
  auto cb = verify_composition(c.scaled(0.01), map_identity(), 0.5);
  CHECK(rel(named(ca, "composition_identity").C, named(cb, "composition_identity").C) <= 1e-10);
}

TEST_CASE("product law") {
  GridSpec g{1, 64, 2 * pi, 1};
  SUBCASE("zero factor") {
    auto c = custom(g, {cos_mode(g, 3), Field(g)});
    auto rs = verify_product_law(c, 0.25);
    for (const auto& r : rs) {
      CHECK(r.pass());
      for (const auto& i : r.instances)
        if (i.label.find("u1") != std::string::npos) CHECK(i.lhs == 0.0);
    }
  }
  SUBCASE("unit multiplier") {
    Field one(g, std::vector<double>(64, 1.0));
    Field b = cos_mode(g, 6) + cos_mode(g, 2, 0.3);
    auto c = custom(g, {one, b});
    auto rs = verify_product_law(c, 0.25);
    const auto& crit = named(rs, "product_critical");
    for (const auto& i : crit.instances)
      if (i.label == "u0*u1") CHECK(rel(i.lhs, besov(b, 0.25)) <= 1e-12);
    CHECK(crit.C >= 1.0 / besov(one, 0.5) * (1 - 1e-12));
  }
  SUBCASE("resolution stable") {
    auto c = make_corpus(g, 8, {5, 1.0});
    auto coarse = verify_product_law(c, 0.25, {100});
    auto fine = verify_product_law(c.at_resolution(128), 0.25, {100});
    for (std::size_t i = 0; i < coarse.size(); ++i) {
      compare_resolutions(coarse[i], fine[i]);
      CHECK(coarse[i].pass());
    }
  }
  CHECK_THROWS(verify_product_law(make_corpus(g, 1, {2, 1.0}), 0.75));
}

TEST_CASE("commutator") {
  GridSpec g{1, 128, 2 * pi, 1};
  SUBCASE("constant multiplier commutes") {
    Field a(g, std::vector<double>(128, 0.7));
    auto c = custom(g, {a, cos_mode(g, 5) + cos_mode(g, 20, 0.2)});
    for (const auto& r : verify_commutator(c, 1.0)) {
      CHECK(r.pass());
      for (const auto& i : r.instances)
        if (i.label.rfind("u0,", 0) == 0) CHECK(i.lhs <= 1e-13);
    }
  }
  SUBCASE("separated modes stay near the high block") {
    Field a = cos_mode(g, 1), b = cos_mode(g, 24);
    for (int j = -1; j <= filter_bank(g)->j_top(); ++j) {
      Field comm = product(a, dyadic_block(b, {j})) - dyadic_block(product(a, b), {j});
      if (std::abs(j - 4) >= 2) CHECK(comm.l2() <= 1e-13);
    }
  }
  SUBCASE("corpus sweep") {
    auto c = make_corpus(g, 12, {4, 1.0});
    auto rs = verify_commutator(c, 1.0, {64});
    auto fine = verify_commutator(c.at_resolution(256), 1.0, {64});
    REQUIRE(rs.size() == 2);
    for (std::size_t i = 0; i < rs.size(); ++i) {
      compare_resolutions(rs[i], fine[i]);
      CHECK(rs[i].pass());
      CHECK(std::isfinite(rs[i].C));
    }
  }
}

TEST_CASE("composition") {
  GridSpec g{1, 64, 2 * pi, 1};
  SUBCASE("identity map") {
    auto c = make_corpus(g, 2, {3, 1.0});
    for (const auto& i : named(verify_composition(c, map_identity(), 0.5), "composition_identity").instances)
      CHECK(rel(i.lhs, i.rhs) <= 1e-14);
  }
  SUBCASE("difference form vanishes on equal arguments") {
    Field u = cos_mode(g, 3, 0.4);
    auto c = custom(g, {u, u});
    for (const auto& i : named(verify_composition(c, map_sin(), 0.5), "composition_difference_sin").instances)
      CHECK(i.lhs == 0.0);
  }
  SUBCASE("square map across amplitudes") {
    auto c = make_corpus(g, 6, {3, 1.0});
    auto big = c.scaled(0.1), small = c.scaled(0.01);
    for (std::size_t k = 0; k < c.size(); ++k) {
      auto sq = [](const Field& u) { return product(u, u); };
      const double rb = besov(sq(big.fields[k]), 0.5) / besov(big.fields[k], 0.5);
      const double rs = besov(sq(small.fields[k]), 0.5) / besov(small.fields[k], 0.5);
      CHECK(rel(rb / rs, 10.0) <= 1e-10);
    }
    const double Cb = named(verify_composition(big, map_square(), 0.5), "composition_square").C;
    const double Cs = named(verify_composition(small, map_square(), 0.5), "composition_square").C;
    CHECK(rel(Cb, Cs) <= 1e-10);
  }
  SUBCASE("preconditions") {
    auto c = make_corpus(g, 2, {2, 1.0});
    ScalarMap shifted{"shift", [](double x) { return x + 1.0; }, [](double) { return 1.0; }};
    CHECK_THROWS(verify_composition(c, shifted, 0.5));
    CHECK_THROWS(verify_composition(c, map_sin(), -0.5));
  }
}

TEST_CASE("garding") {
  auto spec = assemble_nsf(1, {1.0, 1.0}, {1.0, 0.0, 1.0});
  GridSpec g{1, 64, 2 * pi, 3};
  Field U = sample(g, [&](int c, const double*) { return spec.U_bar[c]; });
  GridSpec g2 = g.with_components(2);

  SUBCASE("single mode at the reference state") {
    const int k = 5;
    // velocity and temperature symbols are nu = 2 and k/theta = 1 in one dimension
    Field fu = sample(g2, [&](int c, const double* x) { return c == 0 ? std::cos(k * x[0]) : 0.0; });
    Field ft = sample(g2, [&](int c, const double* x) { return c == 1 ? std::sin(k * x[0]) : 0.0; });
    CHECK(rel(garding_lhs(spec, U, fu), 2.0 * k * k * fu.l2() * fu.l2()) <= 1e-10);
    CHECK(rel(garding_lhs(spec, U, ft), 1.0 * k * k * ft.l2() * ft.l2()) <= 1e-10);
    CHECK(garding_lhs(spec, U, fu) >= 1.0 * k * k * fu.l2() * fu.l2());
    CHECK(garding_lhs(spec, U, Field(g2)) == 0.0);
  }

  SUBCASE("constant shrinks as eps grows") {
    Field Uv = sample(g, [&](int c, const double* x) { return spec.U_bar[c] + (c == 2 ? 0.3 * std::sin(x[0]) : 0.0); });
    auto c = make_corpus(g.with_components(1), 4, {3, 1.0});
    auto fs = vector_members(c, 2);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {1e-3, 1e-2, 1e-1, 1.0}) {
      auto r = verify_garding(spec, Uv, fs, eps, 0.5);
      CHECK(r.pass());
      CHECK(r.C <= prev);
      prev = r.C;
    }
  }
}

TEST_CASE("a priori estimates on simple runs") {
  SUBCASE("zero solution") {
    auto spec = assemble_barotropic(1, gamma_law(1.0, 2.0, 1.0, 0.0));
    GridSpec g{1, 32, 2 * pi, 2};
    LinearRunRecord rec;
    for (int i = 0; i <= 4; ++i) {
      rec.Vt.push(0.1 * i, Field(g));
      rec.V.push(0.1 * i, Field(g));
      rec.theta.push(0.1 * i, Field(g));
    }
    auto h = verify_apriori_hyperbolic(spec, rec, 1.0);
    auto p = verify_apriori_parabolic(spec, rec, 0.0);
    CHECK(h.pass());
    CHECK(p.pass());
    CHECK(h.C == 0.0);
    CHECK(p.C == 0.0);
  }

  SUBCASE("constant advection") {
    auto spec = assemble_barotropic(1, gamma_law(1.0, 2.0, 1.0, 0.0));
    GridSpec g{1, 64, 2 * pi, 2};
    const double a = 0.3;
    LinearRunRecord rec;
    for (int i = 0; i <= 20; ++i) {
      const double t = 0.05 * i;
      rec.Vt.push(t, sample(g, [&](int c, const double* x) { return c == 0 ? std::cos(3 * (x[0] - a * t)) : 0.0; }));
      rec.V.push(t, sample(g, [&](int c, const double*) { return c == 1 ? a : 0.0; }));
      rec.theta.push(t, Field(g));
    }
    auto h = verify_apriori_hyperbolic(spec, rec, 1.0);
    CHECK(h.pass());
    CHECK(h.extras.at("C0") == doctest::Approx(1.0));
    const double first = h.instances.front().lhs;
    for (const auto& i : h.instances) {
      CHECK(i.lhs == doctest::Approx(first).epsilon(1e-12));
      CHECK(i.rhs >= i.lhs);
    }
  }

  SUBCASE("heat with no source") {
    auto spec = assemble_heat(1, 1);
    GridSpec g{1, 64, 2 * pi, 1};
    Field v0 = cos_mode(g, 3) + cos_mode(g, 10, 0.3);
    LinearRunRecord rec;
    rec.Vt = solve_constant_parabolic(v0, ConstantParabolicOp::heat(1), 0.2, 100);
    for (std::size_t i = 0; i < rec.Vt.size(); ++i) {
      rec.V.push(rec.Vt.time(i), Field(g));
      rec.theta.push(rec.Vt.time(i), Field(g));
    }
    auto p = verify_apriori_parabolic(spec, rec, 0.5);
    CHECK(p.pass());
    CHECK(std::isfinite(p.C));
    CHECK(p.extras.at("c") > 0.0);
    CHECK(p.extras.at("c") <= 0.5625);
    auto h = verify_apriori_hyperbolic(spec, rec, 1.0);
    CHECK(h.pass());
    CHECK(h.extras.at("vacuous") == 1.0);
  }
}

#include <doctest.h>

#include <random>

#include "hypar/besov.hpp"
#include "hypar/corpus.hpp"
#include "hypar/spectral.hpp"
#include "hypar/trajectory.hpp"
#include "support.hpp"

using namespace hypar;
using namespace hypar::test;

namespace {

// cos(k x) with k in the flat part of block j, per 2^j * [4/3, 3/2].
int flat_k(int j) { return static_cast<int>(std::floor(1.5 * std::ldexp(1.0, j))); }

Trajectory decaying(const Field& u0, double lambda, double T, int samples) {
  Trajectory tr;
  for (int i = 0; i <= samples; ++i) {
    double t = T * i / samples;
    tr.push(t, std::exp(-lambda * t) * u0);
  }
  return tr;
}

}  // namespace

TEST_CASE("zero field") {
  GridSpec g{1, 64, 2 * pi, 1};
  CHECK(besov(Field(g), 1.0) == 0.0);
  CHECK(besov_norm(Field(g), {0.5, 2, 1, Flavor::homogeneous}).total == 0.0);
}

TEST_CASE("single mode values") {
  GridSpec g{1, 128, 2 * pi, 1};
  for (int j : {1, 2, 3, 4}) {
    Field u = cos_mode(g, flat_k(j), 0.3);
    const double l2 = 0.3 * std::sqrt(pi);
    for (double s : {-1.0, 0.0, 0.5, 1.0, 2.0})
      for (Flavor f : {Flavor::homogeneous, Flavor::nonhomogeneous}) {
        auto rec = besov_norm(u, {s, 2, 1, f});
        CHECK(rel(rec.total, std::pow(2.0, j * s) * l2) <= 1e-12);
      }
  }
}

TEST_CASE("record bookkeeping") {
  GridSpec g{2, 32, 2 * pi, 1};
  auto corpus = make_corpus(g, 9, {3, 1.0});
  for (const auto& u : corpus.fields) {
    auto rec = besov_norm(u, {0.7, 2, 2});
    CHECK(rec.total == doctest::Approx(lr_norm(rec.per_block, 2.0)).epsilon(1e-14));
    CHECK(rec.j.size() == rec.per_block.size());
    const double r1 = besov(u, 0.7, 1.0), r2 = besov(u, 0.7, 2.0), ri = besov(u, 0.7, kInf);
    CHECK(ri <= r2 * (1 + 1e-14));
    CHECK(r2 <= r1 * (1 + 1e-14));
  }
  auto rec = besov_norm(corpus.fields[0], {1.0, 2, 1});
  CHECK(rec.to_csv().rfind("j,per_block,cumulative", 0) == 0);
  CHECK(rec.to_json().find("\"profile_hash\"") != std::string::npos);
}

TEST_CASE("annulus shift scales by 2^s") {
  GridSpec g{1, 256, 2 * pi, 1};
  for (double s : {-0.5, 1.0, 1.5}) {
    auto a = besov_norm(cos_mode(g, flat_k(2)), {s, 2, 1, Flavor::homogeneous});
    auto b = besov_norm(cos_mode(g, flat_k(3)), {s, 2, 1, Flavor::homogeneous});
    CHECK(rel(b.total / a.total, std::pow(2.0, s)) <= 1e-12);
  }
}

TEST_CASE("parseval consistency") {
  GridSpec g{2, 32, 2 * pi, 1};
  auto corpus = make_corpus(g, 4, {3, 1.0});
  for (const auto& u : corpus.fields) {
    auto blocks = block_l2_norms(u, Flavor::nonhomogeneous);
    double sq = 0.0;
    for (double b : blocks) sq += b * b;
    CHECK(u.l2() * u.l2() <= 3.0 * sq);
    CHECK(sq <= u.l2() * u.l2() * (1 + 1e-12));
  }
}

TEST_CASE("monotone embedding on high-frequency fields") {
  GridSpec g{1, 128, 2 * pi, 1};
  auto corpus = make_corpus(g, 21, {5, 1.0});
  for (const auto& u0 : corpus.fields) {
    Field u = u0 - low_freq_cutoff(u0, 1, Flavor::nonhomogeneous);
    CHECK(besov(u, 0.25) <= besov(u, 1.0) * (1 + 1e-14));
  }
}

TEST_CASE("chemin-lerner norms") {
  GridSpec g{1, 128, 2 * pi, 1};
  const int j0 = 3;
  Field u0 = cos_mode(g, flat_k(j0), 0.5);
  const double l2 = 0.5 * std::sqrt(pi), s = 1.0;

  SUBCASE("constant in time") {
    Trajectory tr = decaying(u0, 0.0, 1.0, 10);
    BesovIndex idx{s, 2, 1};
    CHECK(rel(chemin_lerner_norm(tr, idx, kInf).total, besov(u0, s)) <= 1e-14);
  }

  SUBCASE("decaying mode, L1 closed form") {
    const double lambda = 2.0, T = 1.0;
    Trajectory tr = decaying(u0, lambda, T, 4000);
    double exact = std::pow(2.0, j0 * s) * l2 * (1 - std::exp(-lambda * T)) / lambda;
    CHECK(rel(chemin_lerner_norm(tr, {s, 2, 1}, 1.0).total, exact) <= 1e-6);
  }

  SUBCASE("minkowski ordering") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n01;
    auto corpus = make_corpus(g, 30, {4, 1.0});
    for (int trial = 0; trial < 100; ++trial) {
      Trajectory tr;
      const std::size_t a = rng() % corpus.size(), b = rng() % corpus.size();
      const double wa = n01(rng), wb = n01(rng), fa = n01(rng), fb = n01(rng);
      for (int i = 0; i <= 20; ++i) {
        double t = i / 20.0;
        tr.push(t, std::cos(fa * t + wa) * corpus.fields[a] + std::sin(fb * t + wb) * corpus.fields[b]);
      }
      BesovIndex idx{0.5, 2, 1};
      CHECK(lebesgue_besov_norm(tr, idx, 2.0) <= chemin_lerner_norm(tr, idx, 2.0).total * (1 + 1e-12));
    }
  }

  SUBCASE("non-uniform sampling rejected") {
    Trajectory tr;
    tr.push(0.0, u0);
    tr.push(0.1, u0);
    tr.push(0.5, u0);
    CHECK_THROWS(chemin_lerner_norm(tr, {s, 2, 1}, 1.0));
  }
}

TEST_CASE("interpolation checks") {
  GridSpec g{1, 128, 2 * pi, 1};
  Field u0 = cos_mode(g, flat_k(2), 0.5) + cos_mode(g, flat_k(4), 0.1);
  for (double lambda : {0.0, 3.0, 30.0}) {
    Trajectory tr = decaying(u0, lambda, 1.0, 200);
    auto rep = interpolation_check(tr, 1.0);
    CHECK(rep.ok);
    CHECK(rep.ratio <= 1 + 1e-6);
  }

  Trajectory one = decaying(cos_mode(g, flat_k(3)), 1.0, 1.0, 50);
  auto log = log_interpolation_check(one);
  CHECK(rel(log.lhs, log.x) <= 1e-12);
  CHECK(log.log_factor >= 1.0);

  Trajectory zero = decaying(Field(g), 0.0, 1.0, 5);
  CHECK(log_interpolation_check(zero).ratio == 0.0);
}

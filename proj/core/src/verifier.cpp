#include "hypar/verifier.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>

#include "hypar/besov.hpp"
#include "hypar/errors.hpp"
#include "hypar/parallel.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

constexpr double kTol = 1e-11;

// sum_j 2^{js} b_j over nonhomogeneous blocks.
double weighted(const std::vector<int>& js, const std::vector<double>& b, double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < js.size(); ++i) acc += std::pow(2.0, s * js[i]) * b[i];
  return acc;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return out;
}

double grad_sup(const Field& a) { return upsampled_linf(spectral_gradient(a), 2); }

// Condition-number factor of a constant SPD block: cond^{1/2} max(1, 1/lambda_min).
double block_C0(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw InvalidArgument("a priori: reference block is not positive definite");
  return std::sqrt(hi / lo) * std::max(1.0, 1.0 / lo);
}

// Matrix-valued coefficient fields, n_blk^2 components in column-major order.
Field coefficient_field(const SystemSpec& spec, const Field& V, int off, int nb,
                        const std::function<void(const double*, double*)>& assemble, int full) {
  const int n = spec.n();
  std::vector<double> buf(static_cast<std::size_t>(full * full));
  return pointwise(V, nb * nb, [&](const double* v, double* out) {
    std::vector<double> U(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) U[c] = spec.U_bar(c) + v[c];
    assemble(U.data(), buf.data());
    for (int j = 0; j < nb; ++j)
      for (int i = 0; i < nb; ++i) out[j * nb + i] = buf[(off + j) * full + off + i];
  });
}

void require_record(const LinearRunRecord& run, int n) {
  if (run.Vt.empty()) throw InvalidArgument("a priori: empty trajectory");
  if (run.theta.size() != run.Vt.size()) throw InvalidArgument("a priori: missing source record");
  if (run.V.size() != run.Vt.size()) throw InvalidArgument("a priori: missing coefficient record");
  if (run.Vt.grid().n != n || run.V.grid().n != n || run.theta.grid().n != n)
    throw InvalidArgument("a priori: records must carry all system components");
}

InequalityInstance make(std::string label, double lhs, double rhs, double scale = 1.0) {
  InequalityInstance i;
  i.label = std::move(label);
  i.lhs = lhs;
  i.rhs = rhs;
  i.scale = scale;
  return i;
}

}  // namespace

bool InequalityReport::finite() const { return std::isfinite(C) && C >= 0.0; }

std::string InequalityReport::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["C"] = C;
  j["stable"] = stable;
  j["pass"] = pass();
  if (std::isfinite(C_refined)) {
    j["C_refined"] = C_refined;
    j["variation"] = variation;
  }
  j["violations"] = violations;
  j["extras"] = extras;
  auto& arr = j["instances"] = nlohmann::json::array();
  for (const auto& i : instances) arr.push_back({{"label", i.label}, {"lhs", i.lhs}, {"rhs", i.rhs}});
  return j.dump(2);
}

void fit_constant(InequalityReport& r, double tol) {
  r.C = 0.0;
  r.violations.clear();
  for (const auto& i : r.instances) {
    if (!std::isfinite(i.lhs) || !std::isfinite(i.rhs)) {
      r.violations.push_back(i.label + ": non-finite value");
      continue;
    }
    const double z = tol * std::max(1.0, i.scale);
    if (i.rhs <= z) {
      if (i.lhs > z) r.violations.push_back(i.label + ": lhs > 0 with vanishing rhs");
      continue;
    }
    r.C = std::max(r.C, i.lhs / i.rhs);
  }
}

void compare_resolutions(InequalityReport& r, const InequalityReport& refined, double rel, double abs) {
  r.C_refined = refined.C;
  const double m = std::max(r.C, refined.C);
  const double diff = std::fabs(r.C - refined.C);
  r.variation = m > 0.0 ? diff / m : 0.0;
  r.stable = diff <= rel * m + abs;
}

std::vector<std::pair<std::size_t, std::size_t>> corpus_pairs(const Corpus& c, std::size_t max_pairs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = c.size();
  if (n == 0) return out;
  if (n * n <= max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) out.emplace_back(i, j);
    return out;
  }
  std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < max_pairs; ++k) out.emplace_back(pick(rng), pick(rng));
  return out;
}

std::vector<InequalityReport> verify_product_law(const Corpus& c, double s, const PairOptions& opt) {
  const double d = c.grid.d;
  if (!(s > -0.5 * d && s <= 0.5 * d)) throw InvalidArgument("product law: s must lie in (-d/2, d/2]");
  const auto pairs = corpus_pairs(c, opt.max_pairs);
  const bool linf_form = s > 0.0;
  std::vector<InequalityInstance> crit(pairs.size()), linf(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const Field& a = c.fields[pairs[k].first];
    const Field& b = c.fields[pairs[k].second];
    const std::string label = c.labels[pairs[k].first] + "*" + c.labels[pairs[k].second];
    const double lhs = besov(product(a, b), s, 1.0, opt.flavor);
    const double as = besov(a, s, 1.0, opt.flavor), bs = besov(b, s, 1.0, opt.flavor);
    const double ad = besov(a, 0.5 * d, 1.0, opt.flavor);
    crit[k] = make(label, lhs, ad * bs, ad * bs);
    if (linf_form) {
      const double r = upsampled_linf(a, 2) * bs + upsampled_linf(b, 2) * as;
      linf[k] = make(label, lhs, r, r);
    }
  });
  std::vector<InequalityReport> out;
  InequalityReport r1;
  r1.name = "product_critical";
  r1.instances = std::move(crit);
  r1.extras["s"] = s;
  fit_constant(r1, kTol);
  out.push_back(std::move(r1));
  if (linf_form) {
    InequalityReport r2;
    r2.name = "product_linf";
    r2.instances = std::move(linf);
    r2.extras["s"] = s;
    fit_constant(r2, kTol);
    out.push_back(std::move(r2));
  }
  return out;
}

std::vector<InequalityReport> verify_commutator(const Corpus& c, double sigma, const PairOptions& opt) {
  const double d = c.grid.d;
  const bool form_a = sigma > 0.0;
  const bool form_b = sigma > -0.5 * d && sigma <= 0.5 * d + 1.0;
  if (!form_a && !form_b) throw InvalidArgument("commutator: sigma admits neither form");
  const auto pairs = corpus_pairs(c, opt.max_pairs);
  const auto fb = filter_bank(c.grid);
  const auto js = fb->blocks(Flavor::nonhomogeneous);
  std::vector<double> lhs(pairs.size()), ra(pairs.size()), rb(pairs.size()), sc(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const Field& a = c.fields[pairs[k].first];
    const Field& b = c.fields[pairs[k].second];
    const Field ab = product(a, b);
    double acc = 0.0;
    for (int j : js) {
      const BlockIndex bj{j, Flavor::nonhomogeneous};
      Field comm = product(a, dyadic_block(b, bj));
      comm -= dyadic_block(ab, bj);
      acc += std::pow(2.0, sigma * j) * comm.l2();
    }
    lhs[k] = acc;
    const Field ga = spectral_gradient(a);
    const double gsup = grad_sup(a);
    const double bnorm = besov(b, sigma - 1.0, 1.0);
    ra[k] = gsup * bnorm + upsampled_linf(b, 2) * besov(ga, sigma - 1.0, 1.0);
    rb[k] = (besov(ga, 0.5 * d, kInf) + gsup) * bnorm;
    sc[k] = a.l2() * b.l2() / std::sqrt(c.grid.volume());
  });
  std::vector<InequalityReport> out;
  auto build = [&](const std::string& name, const std::vector<double>& rhs) {
    InequalityReport r;
    r.name = name;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      r.instances.push_back(make(c.labels[pairs[k].first] + "," + c.labels[pairs[k].second], lhs[k], rhs[k], sc[k]));
    fit_constant(r, kTol);
    // c_j = 2^{j sigma} ||[a, Delta_j] b|| / (C rhs) sums to lhs / (C rhs) per pair.
    double smax = 0.0;
    if (r.C > 0.0)
      for (const auto& i : r.instances)
        if (i.rhs > kTol * std::max(1.0, i.scale)) smax = std::max(smax, i.lhs / (r.C * i.rhs));
    r.extras["sum_cj_max"] = smax;
    r.extras["sigma"] = sigma;
    out.push_back(std::move(r));
  };
  if (form_a) build("commutator_linf", ra);
  if (form_b) build("commutator_critical", rb);
  return out;
}

ScalarMap map_square() {
  return {"square", [](double x) { return x * x; }, [](double M) { return 2.0 * M; }};
}
ScalarMap map_sin() {
  return {"sin", [](double x) { return std::sin(x); }, [](double) { return 1.0; }};
}
ScalarMap map_expm1() {
  return {"expm1", [](double x) { return std::expm1(x); }, [](double M) { return std::exp(M); }};
}
ScalarMap map_identity() {
  return {"identity", [](double x) { return x; }, [](double) { return 1.0; }};
}

std::vector<InequalityReport> verify_composition(const Corpus& c, const ScalarMap& f, double s,
                                                 const PairOptions& opt) {
  if (!(s > 0.0)) throw InvalidArgument("composition: s must be positive");
  if (!f.f || !f.dsup) throw InvalidArgument("composition: map and derivative bound required");
  if (std::fabs(f.f(0.0)) > 1e-14) throw InvalidArgument("composition: f(0) must vanish");
  const double d = c.grid.d;
  auto compose = [&](const Field& u) { return pointwise(u, 1, [&](const double* x, double* y) { y[0] = f.f(x[0]); }); };
  std::vector<InequalityInstance> base(c.size());
  parallel_for(c.size(), [&](std::size_t k) {
    const Field& u = c.fields[k];
    const double M = upsampled_linf(u, 2);
    const double un = besov(u, s, 1.0, opt.flavor);
    base[k] = make(c.labels[k], besov(compose(u), s, 1.0, opt.flavor), f.dsup(M) * un, un);
  });
  const auto pairs = corpus_pairs(c, opt.max_pairs);
  std::vector<InequalityInstance> diff(pairs.size());
  const double sm = std::max(s, 0.5 * d);
  parallel_for(pairs.size(), [&](std::size_t k) {
    const Field& u = c.fields[pairs[k].first];
    const Field& v = c.fields[pairs[k].second];
    const double M = std::max(upsampled_linf(u, 2), upsampled_linf(v, 2));
    const double uv = besov(u, sm, 1.0, opt.flavor) + besov(v, sm, 1.0, opt.flavor);
    const double dn = besov(u - v, s, 1.0, opt.flavor);
    const double lhs = besov(compose(u) - compose(v), s, 1.0, opt.flavor);
    diff[k] = make(c.labels[pairs[k].first] + "-" + c.labels[pairs[k].second], lhs, f.dsup(M) * (1.0 + uv) * dn,
                   std::max(besov(u, s, 1.0, opt.flavor), 1e-300));
  });
  InequalityReport r1, r2;
  r1.name = "composition_" + f.name;
  r1.instances = std::move(base);
  r1.extras["s"] = s;
  fit_constant(r1, kTol);
  r2.name = "composition_difference_" + f.name;
  r2.instances = std::move(diff);
  r2.extras["s"] = s;
  fit_constant(r2, kTol);
  return {std::move(r1), std::move(r2)};
}

double garding_lhs(const SystemSpec& spec, const Field& U, const Field& f) {
  const int n2 = spec.n2, d = spec.d, n = spec.n();
  if (f.components() != n2) throw InvalidArgument("garding: f must have n2 components");
  if (U.components() != n || !U.grid().same_mesh(f.grid())) throw InvalidArgument("garding: state does not match");
  const std::size_t P = f.points();
  std::vector<double> st(static_cast<std::size_t>(n)), Z(static_cast<std::size_t>(n2 * n2));
  double acc = 0.0;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const Field dd = [&] {
        std::vector<Field> parts;
        for (int i = 0; i < n2; ++i) parts.push_back(spectral_second_derivative(f.component_field(i), a, b));
        return n2 == 1 ? parts[0] : Field::stack(parts);
      }();
      for (std::size_t p = 0; p < P; ++p) {
        for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
        spec.Z(st.data(), a, b, Z.data());
        for (int i = 0; i < n2; ++i)
          for (int j = 0; j < n2; ++j) acc -= Z[j * n2 + i] * dd.at(j, p) * f.at(i, p);
      }
    }
  return acc * f.grid().cell_volume();
}

InequalityReport verify_garding(const SystemSpec& spec, const Field& U, const std::vector<Field>& fs, double eps,
                                double c) {
  if (!(eps >= 0.0)) throw InvalidArgument("garding: eps must be non-negative");
  if (!U.finite()) throw InvalidArgument("garding: state must be bounded");
  std::vector<InequalityInstance> inst(fs.size());
  const int d = spec.d;
  parallel_for(fs.size(), [&](std::size_t k) {
    const Field& f = fs[k];
    const double lhs = garding_lhs(spec, U, f);
    const double g2 = std::pow(spectral_gradient(f).l2(), 2);
    double h2 = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int i = 0; i < f.components(); ++i)
          h2 += std::pow(spectral_second_derivative(f.component_field(i), a, b).l2(), 2);
    const double f2 = f.l2() * f.l2();
    const double deficit = c * g2 - eps * std::sqrt(h2) * std::sqrt(f2) - lhs;
    inst[k] = make("f" + std::to_string(k), deficit, f2, f2);
  });
  InequalityReport r;
  r.name = "garding";
  r.instances = std::move(inst);
  r.extras["eps"] = eps;
  r.extras["c"] = c;
  // Negative deficits need no constant.
  fit_constant(r, kTol);
  return r;
}

InequalityReport verify_apriori_hyperbolic(const SystemSpec& spec, const LinearRunRecord& run, double sigma) {
  const int n = spec.n(), n1 = spec.n1, d = spec.d;
  if (!(sigma > -0.5 * d)) throw InvalidArgument("a priori: sigma must exceed -d/2");
  require_record(run, n);
  InequalityReport r;
  r.name = "apriori_hyperbolic";
  if (n1 == 0) {
    r.extras["vacuous"] = 1.0;
    return r;
  }
  const Mat S0b = spec.S0_at(spec.U_bar);
  const double C0 = block_C0(S0b.topLeftCorner(n1, n1));
  const double s2 = std::max(0.5 * d, sigma - 1.0) + 1.0;
  const auto& t = run.Vt.times();
  const std::size_t K = t.size();
  const Trajectory V1 = run.Vt.components(0, n1);
  const Trajectory th = run.theta.components(0, n1);
  const auto& bv = V1.block_norms(Flavor::nonhomogeneous);
  const auto& bt = th.block_norms(Flavor::nonhomogeneous);

  // DIV S11(U) = dt S0_11(U) + sum_a d_a S^a_11(U)
  Trajectory S0t;
  S0t.dt = run.V.dt;
  for (std::size_t i = 0; i < K; ++i)
    S0t.push(t[i], coefficient_field(spec, run.V.field(i), 0, n1, [&](const double* U, double* M) { spec.S0(U, M); }, n));
  const Trajectory dS0 = S0t.time_derivative();
  std::vector<double> nv(K), nt(K), phi(K);
  parallel_for(K, [&](std::size_t i) {
    Field div = dS0.field(i);
    for (int a = 0; a < d; ++a) {
      Field Sa = coefficient_field(spec, run.V.field(i), 0, n1,
                                   [&](const double* U, double* M) { spec.Salpha(U, a, M); }, n);
      div += spectral_derivative(Sa, a);
    }
    nv[i] = weighted(bv.j, bv.values[i], sigma);
    nt[i] = weighted(bt.j, bt.values[i], sigma);
    phi[i] = div.linf() + besov(run.V.field(i), s2, 1.0);
  });
  std::vector<double> pv(K);
  for (std::size_t i = 0; i < K; ++i) pv[i] = phi[i] * nv[i];
  const auto It = cumulative_trapezoid(t, nt);
  const auto Ip = cumulative_trapezoid(t, pv);
  double runmax = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    runmax = std::max(runmax, nv[i]);
    const double A = nv[0] + It[i];
    r.instances.push_back(make("t=" + std::to_string(t[i]), runmax / C0 - A, Ip[i], std::max(A, runmax)));
  }
  fit_constant(r, 1e-9);
  r.extras["C0"] = C0;
  return r;
}

InequalityReport verify_apriori_parabolic(const SystemSpec& spec, const LinearRunRecord& run, double s) {
  const int n = spec.n(), n1 = spec.n1, n2 = spec.n2, d = spec.d;
  if (!(s > -0.5 * d)) throw InvalidArgument("a priori: s must exceed -d/2");
  require_record(run, n);
  InequalityReport r;
  r.name = "apriori_parabolic";
  ConstantParabolicOp op = ConstantParabolicOp::from_system(spec);
  op.validate();
  const double C0 = block_C0(op.S_bar);
  const double c = op.kappa * 0.5625 / (2.0 * op.s_max());
  const double ss = std::max(0.5 * d, s);
  const auto& t = run.Vt.times();
  const std::size_t K = t.size();
  const Trajectory V2 = run.Vt.components(n1, n2);
  const Trajectory th = run.theta.components(n1, n2);
  const auto& bv = V2.block_norms(Flavor::nonhomogeneous);
  const auto& bt = th.block_norms(Flavor::nonhomogeneous);

  Trajectory S22;
  S22.dt = run.V.dt;
  for (std::size_t i = 0; i < K; ++i)
    S22.push(t[i], coefficient_field(spec, run.V.field(i), n1, n2, [&](const double* U, double* M) { spec.S0(U, M); }, n));
  const Trajectory dS = S22.time_derivative();
  std::vector<double> nv(K), nhi(K), nt(K), phi(K);
  parallel_for(K, [&](std::size_t i) {
    nv[i] = weighted(bv.j, bv.values[i], s);
    nhi[i] = weighted(bv.j, bv.values[i], s + 2.0);
    nt[i] = weighted(bt.j, bt.values[i], s);
    const double a = besov(run.V.field(i), ss, 1.0);
    const double b = besov(run.V.field(i), ss + 1.0, 1.0);
    phi[i] = 1.0 + dS.field(i).linf() + (1.0 + a) * (1.0 + a) * b * b;
  });
  std::vector<double> pv(K);
  for (std::size_t i = 0; i < K; ++i) pv[i] = phi[i] * nv[i];
  const auto It = cumulative_trapezoid(t, nt);
  const auto Ip = cumulative_trapezoid(t, pv);
  const auto Ihi = cumulative_trapezoid(t, nhi);
  const std::size_t B = bv.j.size();
  std::vector<double> bmax(B, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    double cl = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      bmax[b] = std::max(bmax[b], bv.values[i][b]);
      cl += std::pow(2.0, s * bv.j[b]) * bmax[b];
    }
    const double lhs = cl + c * Ihi[i];
    const double A = nv[0] + It[i];
    r.instances.push_back(make("t=" + std::to_string(t[i]), lhs / C0 - A, Ip[i], std::max(A, lhs)));
  }
  fit_constant(r, 1e-9);
  r.extras["C0"] = C0;
  r.extras["c"] = c;
  return r;
}

}  // namespace hypar

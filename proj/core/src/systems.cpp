#include "hypar/systems.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "hypar/errors.hpp"

namespace hypar {

Mat SystemSpec::S0_at(const Vec& U) const {
  Mat m(n(), n());
  S0(U.data(), m.data());
  return m;
}

Mat SystemSpec::Salpha_at(const Vec& U, int alpha) const {
  Mat m(n(), n());
  Salpha(U.data(), alpha, m.data());
  return m;
}

Mat SystemSpec::Z_at(const Vec& U, int alpha, int beta) const {
  Mat m(n2, n2);
  Z(U.data(), alpha, beta, m.data());
  return m;
}

Mat SystemSpec::Z_symbol(const Vec& U, const Vec& xi) const {
  Mat s = Mat::Zero(n2, n2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) s += xi(a) * xi(b) * Z_at(U, a, b);
  return s;
}

Vec SystemSpec::source_at(const Vec& U, const Mat& grad) const {
  Vec f = Vec::Zero(n());
  std::vector<double> g(static_cast<std::size_t>(n() * d));
  for (int c = 0; c < n(); ++c)
    for (int a = 0; a < d; ++a) g[c * d + a] = grad(c, a);
  source(U.data(), g.data(), f.data());
  return f;
}

SystemSpec assemble_nsf(int d, const GasLaw& gas, const Transport& tr, double rho_bar, double theta_bar) {
  if (d < 1 || d > 3) throw InvalidArgument("nsf: d must be 1..3");
  if (!(tr.mu > 0.0)) throw InvalidArgument("nsf: mu must be positive");
  if (!(2.0 * tr.mu + tr.lambda > 0.0)) throw InvalidArgument("nsf: nu = 2 mu + lambda must be positive");
  if (!(tr.kappa > 0.0)) throw InvalidArgument("nsf: k must be positive");
  if (!(gas.R > 0.0) || !(gas.cv > 0.0)) throw InvalidArgument("nsf: R and c_v must be positive");
  if (!(rho_bar > 0.0) || !(theta_bar > 0.0)) throw InvalidArgument("nsf: reference state outside phase space");

  SystemSpec s;
  s.name = "nsf";
  s.n1 = 1;
  s.n2 = d + 1;
  s.d = d;
  s.profile = AssumptionProfile::B;
  s.params = {{"R", gas.R}, {"cv", gas.cv}, {"mu", tr.mu}, {"lambda", tr.lambda}, {"k", tr.kappa},
              {"rho_bar", rho_bar}, {"theta_bar", theta_bar}};
  s.U_bar = Vec::Zero(d + 2);
  s.U_bar(0) = rho_bar;
  s.U_bar(d + 1) = theta_bar;
  const int n = d + 2;
  const int it = d + 1;
  s.in_phase = [it](const double* U) { return U[0] > 0.0 && U[it] > 0.0 && std::isfinite(U[0]) && std::isfinite(U[it]); };
  s.phase_distance = [it](const double* U) { return std::min(U[0], U[it]); };
  s.phase_distance_1 = [](const double* U1) { return U1[0]; };
  const double R = gas.R, cv = gas.cv, mu = tr.mu, la = tr.lambda, k = tr.kappa;
  s.S0 = [=](const double* U, double* M) {
    std::fill(M, M + n * n, 0.0);
    const double rho = U[0], th = U[it];
    M[0] = R * th / rho;
    for (int i = 1; i <= d; ++i) M[i * n + i] = rho;
    M[it * n + it] = rho * cv / th;
  };
  s.Salpha = [=](const double* U, int a, double* M) {
    std::fill(M, M + n * n, 0.0);
    const double rho = U[0], th = U[it], ua = U[1 + a];
    const double p_rho = R * th, p_th = R * rho;
    auto at = [&](int r, int c) -> double& { return M[c * n + r]; };
    at(0, 0) = p_rho / rho * ua;
    at(0, 1 + a) = p_rho;
    at(1 + a, 0) = p_rho;
    for (int i = 1; i <= d; ++i) at(i, i) = rho * ua;
    at(1 + a, it) = p_th;
    at(it, 1 + a) = p_th;
    at(it, it) = rho * cv / th * ua;
  };
  s.Z = [=](const double* U, int a, int b, double* M) {
    const int m = d + 1;
    std::fill(M, M + m * m, 0.0);
    auto at = [&](int r, int c) -> double& { return M[c * m + r]; };
    for (int i = 0; i < d; ++i)
      for (int kk = 0; kk < d; ++kk) {
        double v = 0.0;
        if (a == b && i == kk) v += mu;
        if (a == kk && b == i) v += mu;
        if (a == i && b == kk) v += la;
        at(i, kk) = v;
      }
    at(d, d) = a == b ? k / U[it] : 0.0;
  };
  s.source_uses_gradient = true;
  s.source = [=](const double* U, const double* g, double* f) {
    std::fill(f, f + n, 0.0);
    const double th = U[it];
    // grad u^i along x_j is g[(1+i)*d + j]
    double tt = 0.0, div = 0.0;
    for (int i = 0; i < d; ++i) {
      div += g[(1 + i) * d + i];
      for (int j = 0; j < d; ++j) {
        const double e = g[(1 + i) * d + j] + g[(1 + j) * d + i];
        tt += 0.5 * mu * e * e;
      }
    }
    tt += la * div * div;
    double gt2 = 0.0;
    for (int j = 0; j < d; ++j) gt2 += g[it * d + j] * g[it * d + j];
    // T/theta - k grad(theta).grad(1/theta)
    f[it] = tt / th + k * gt2 / (th * th);
  };
  return s;
}

BarotropicLaw gamma_law(double A, double gamma, double mu, double lambda) {
  BarotropicLaw law;
  law.p = [=](double rho) { return A * std::pow(rho, gamma); };
  law.dp = [=](double rho) { return A * gamma * std::pow(rho, gamma - 1.0); };
  law.mu = [=](double, const double*) { return mu; };
  law.lambda = [=](double, const double*) { return lambda; };
  law.params = {{"A", A}, {"gamma", gamma}, {"mu", mu}, {"lambda", lambda}};
  return law;
}

SystemSpec assemble_barotropic(int d, const BarotropicLaw& law, double rho_bar) {
  if (d < 1 || d > 3) throw InvalidArgument("barotropic: d must be 1..3");
  if (!law.p || !law.dp || !law.mu || !law.lambda) throw InvalidArgument("barotropic: incomplete law");
  if (!(rho_bar > law.rho_floor) || !(rho_bar > 0.0)) throw InvalidArgument("barotropic: reference density outside phase space");
  std::vector<double> zero(static_cast<std::size_t>(d), 0.0);
  if (!(law.dp(rho_bar) > 0.0)) throw InvalidArgument("barotropic: p'(rho_bar) must be positive");
  const double mu0 = law.mu(rho_bar, zero.data()), la0 = law.lambda(rho_bar, zero.data());
  if (!(mu0 > 0.0) || !(2.0 * mu0 + la0 > 0.0)) throw InvalidArgument("barotropic: need mu > 0 and 2 mu + lambda > 0");

  SystemSpec s;
  s.name = "barotropic";
  s.n1 = 1;
  s.n2 = d;
  s.d = d;
  s.profile = AssumptionProfile::C;
  s.params = law.params;
  s.params["rho_bar"] = rho_bar;
  s.U_bar = Vec::Zero(d + 1);
  s.U_bar(0) = rho_bar;
  const int n = d + 1;
  const double floor = std::max(0.0, law.rho_floor);
  s.in_phase = [floor](const double* U) { return std::isfinite(U[0]) && U[0] > floor; };
  s.phase_distance = [floor](const double* U) { return U[0] - floor; };
  s.phase_distance_1 = [floor](const double* U1) { return U1[0] - floor; };
  auto dp = law.dp;
  auto mu = law.mu;
  auto lam = law.lambda;
  s.S0 = [=](const double* U, double* M) {
    std::fill(M, M + n * n, 0.0);
    M[0] = dp(U[0]) / U[0];
    for (int i = 1; i <= d; ++i) M[i * n + i] = U[0];
  };
  s.Salpha = [=](const double* U, int a, double* M) {
    std::fill(M, M + n * n, 0.0);
    const double rho = U[0], ua = U[1 + a], pr = dp(rho);
    auto at = [&](int r, int c) -> double& { return M[c * n + r]; };
    at(0, 0) = pr / rho * ua;
    at(0, 1 + a) = pr;
    at(1 + a, 0) = pr;
    for (int i = 1; i <= d; ++i) at(i, i) = rho * ua;
  };
  s.Z = [=](const double* U, int a, int b, double* M) {
    std::fill(M, M + d * d, 0.0);
    const double m = mu(U[0], U + 1), l = lam(U[0], U + 1);
    for (int i = 0; i < d; ++i)
      for (int kk = 0; kk < d; ++kk) {
        double v = 0.0;
        if (a == b && i == kk) v += m;
        if (a == kk && b == i) v += m;
        if (a == i && b == kk) v += l;
        M[kk * d + i] = v;
      }
  };
  s.source = [n](const double*, const double*, double* f) { std::fill(f, f + n, 0.0); };
  return s;
}

SystemSpec assemble_heat(int d, int n2, double diffusivity) {
  if (!(diffusivity > 0.0)) throw InvalidArgument("heat: diffusivity must be positive");
  SystemSpec s;
  s.name = "heat";
  s.n1 = 0;
  s.n2 = n2;
  s.d = d;
  s.profile = AssumptionProfile::C;
  s.params = {{"diffusivity", diffusivity}};
  s.U_bar = Vec::Zero(n2);
  s.in_phase = [](const double*) { return true; };
  s.phase_distance = [](const double*) { return std::numeric_limits<double>::infinity(); };
  s.phase_distance_1 = [](const double*) { return std::numeric_limits<double>::infinity(); };
  s.S0 = [n2](const double*, double* M) {
    std::fill(M, M + n2 * n2, 0.0);
    for (int i = 0; i < n2; ++i) M[i * n2 + i] = 1.0;
  };
  s.Salpha = [n2](const double*, int, double* M) { std::fill(M, M + n2 * n2, 0.0); };
  s.Z = [n2, diffusivity](const double*, int a, int b, double* M) {
    std::fill(M, M + n2 * n2, 0.0);
    if (a == b)
      for (int i = 0; i < n2; ++i) M[i * n2 + i] = diffusivity;
  };
  s.source = [n2](const double*, const double*, double* f) { std::fill(f, f + n2, 0.0); };
  return s;
}

namespace {

Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> N01(0.0, 1.0);
  Vec v(n);
  do {
    for (int i = 0; i < n; ++i) v(i) = N01(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

}  // namespace

EllipticityReport check_strong_ellipticity(const SystemSpec& spec, const std::vector<Vec>& U_samples,
                                           const std::vector<Vec>& xi_samples,
                                           const std::vector<Vec>& lambda_samples) {
  if (xi_samples.size() != lambda_samples.size()) throw InvalidArgument("ellipticity: xi/lambda sample count mismatch");
  EllipticityReport rep;
  rep.c1_hat = std::numeric_limits<double>::infinity();
  rep.exact_min = std::numeric_limits<double>::infinity();
  const int d = spec.d, n2 = spec.n2;
  std::vector<Mat> Zs(static_cast<std::size_t>(d * d));
  for (const Vec& U : U_samples) {
    if (!spec.admits(U)) throw InvalidArgument("ellipticity: sample outside the phase space");
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) Zs[a * d + b] = spec.Z_at(U, a, b);
    for (std::size_t i = 0; i < xi_samples.size(); ++i) {
      const Vec& xi = xi_samples[i];
      const Vec& la = lambda_samples[i];
      Mat sym = Mat::Zero(n2, n2);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) sym += xi(a) * xi(b) * Zs[a * d + b];
      const double den = xi.squaredNorm() * la.squaredNorm();
      if (den <= 0.0) continue;
      const double q = la.dot(sym * la) / den;
      ++rep.sample_count;
      if (q < rep.c1_hat) {
        rep.c1_hat = q;
        rep.worst_xi = xi;
        rep.worst_lambda = la;
        rep.worst_U = U;
      }
      Mat hs = 0.5 * (sym + sym.transpose()) / xi.squaredNorm();
      Eigen::SelfAdjointEigenSolver<Mat> es(hs, Eigen::EigenvaluesOnly);
      rep.exact_min = std::min(rep.exact_min, es.eigenvalues()(0));
    }
  }
  rep.ok = rep.sample_count > 0 && rep.c1_hat > 0.0;
  return rep;
}

EllipticityReport check_strong_ellipticity(const SystemSpec& spec, const std::vector<Vec>& U_samples,
                                           std::size_t samples, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> xs, ls;
  for (int a = 0; a < spec.d; ++a)
    for (int i = 0; i < spec.n2; ++i) {
      xs.push_back(Vec::Unit(spec.d, a));
      ls.push_back(Vec::Unit(spec.n2, i));
    }
  while (xs.size() < samples) {
    xs.push_back(random_unit(rng, spec.d));
    ls.push_back(random_unit(rng, spec.n2));
  }
  return check_strong_ellipticity(spec, U_samples, xs, ls);
}

bool AssumptionReport::pass() const {
  for (const auto& it : items)
    if (!it.pass) return false;
  return true;
}

const CheckItem* AssumptionReport::find(const std::string& name) const {
  for (const auto& it : items)
    if (it.name == name) return &it;
  return nullptr;
}

namespace {

void record(AssumptionReport& rep, const std::string& name, double residual, double tol, const std::string& note = "") {
  for (auto& it : rep.items)
    if (it.name == name) {
      it.residual = std::max(it.residual, residual);
      it.pass = it.residual <= it.tolerance;
      return;
    }
  CheckItem it;
  it.name = name;
  it.residual = residual;
  it.tolerance = tol;
  it.pass = residual <= tol;
  it.note = note;
  rep.items.push_back(it);
}

double sym_residual(const Mat& m) { return m.size() == 0 ? 0.0 : (m - m.transpose()).norm(); }

}  // namespace

AssumptionReport check_assumption_B(const SystemSpec& spec, const std::vector<Vec>& U_samples) {
  AssumptionReport rep;
  const int n1 = spec.n1, n2 = spec.n2, n = spec.n();
  const double tol = 1e-10;
  for (const Vec& U : U_samples) {
    if (!spec.admits(U)) throw InvalidArgument("assumption B: sample outside the phase space");
    Mat S0 = spec.S0_at(U);
    const double scale = std::max(1.0, S0.norm());
    double off = 0.0;
    if (n1 > 0 && n2 > 0) off = S0.block(0, n1, n1, n2).norm() + S0.block(n1, 0, n2, n1).norm();
    record(rep, "S0 block diagonal", off / scale, tol);
    Eigen::FullPivLU<Mat> lu(S0);
    record(rep, "S0 invertible", lu.isInvertible() ? 0.0 : 1.0, 0.0);
    Mat S22 = S0.block(n1, n1, n2, n2);
    double spd = sym_residual(S22) / scale;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S22 + S22.transpose()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) <= 0.0) spd = std::max(spd, 1.0);
    record(rep, "S0_22 symmetric positive definite", spd, tol);
    if (n1 > 0) {
      Mat S11 = S0.block(0, 0, n1, n1);
      Eigen::SelfAdjointEigenSolver<Mat> e11(0.5 * (S11 + S11.transpose()), Eigen::EigenvaluesOnly);
      const bool s11_spd = sym_residual(S11) <= tol * scale && e11.eigenvalues()(0) > 0.0;
      double worst = 0.0;
      for (int a = 0; a < spec.d; ++a) {
        Mat Sa = spec.Salpha_at(U, a).block(0, 0, n1, n1);
        Mat At = S11.inverse() * Sa;
        const double r_direct = s11_spd ? sym_residual(Sa) : std::numeric_limits<double>::infinity();
        worst = std::max(worst, std::min(r_direct, sym_residual(At)));
      }
      record(rep, "hyperbolic block symmetrizable", worst, tol);
    } else {
      record(rep, "hyperbolic block symmetrizable", 0.0, tol, "vacuous: n1 = 0");
    }
    double sa_sym = 0.0;
    for (int a = 0; a < spec.d; ++a) sa_sym = std::max(sa_sym, sym_residual(spec.Salpha_at(U, a)));
    record(rep, "S^alpha symmetric", sa_sym / scale, tol);
    record(rep, "Y^ab block form", 0.0, tol, "diffusion acts on the last n2 components by construction");
  }
  std::vector<double> grad(static_cast<std::size_t>(n * spec.d), 0.0);
  Vec f(n);
  spec.source(spec.U_bar.data(), grad.data(), f.data());
  record(rep, "f vanishes at U_bar", f.norm(), tol);
  return rep;
}

AssumptionReport check_assumption_C(const SystemSpec& spec, const std::vector<Vec>& U_samples, double h) {
  if (!(h > 0.0)) throw InvalidArgument("assumption C: perturbation size must be positive");
  AssumptionReport rep;
  const int n1 = spec.n1, n2 = spec.n2, n = spec.n(), d = spec.d;
  const double tol_d = 1e-7;
  const double tol_aff = 1e-12;
  const double h_aff = 0.1;

  auto S22 = [&](const Vec& U) { return Mat(spec.S0_at(U).block(n1, n1, n2, n2)); };
  auto Sa21 = [&](const Vec& U, int a) { return Mat(spec.Salpha_at(U, a).block(n1, 0, n2, n1)); };
  auto Sa22 = [&](const Vec& U, int a) { return Mat(spec.Salpha_at(U, a).block(n1, n1, n2, n2)); };
  auto tS11 = [&](const Vec& U, int a) {
    Mat S0 = spec.S0_at(U);
    return Mat(S0.block(0, 0, n1, n1).inverse() * spec.Salpha_at(U, a).block(0, 0, n1, n1));
  };
  auto tS12 = [&](const Vec& U, int a) {
    Mat S0 = spec.S0_at(U);
    return Mat(S0.block(0, 0, n1, n1).inverse() * spec.Salpha_at(U, a).block(0, n1, n1, n2));
  };

  // Max central-difference derivative over the listed coordinates, confirmed at h/2.
  auto dmax = [&](const std::function<Mat(const Vec&)>& M, const Vec& U, int first, int count) {
    double worst = 0.0;
    for (int i = first; i < first + count; ++i) {
      double dd[2];
      for (int r = 0; r < 2; ++r) {
        const double hh = (r == 0 ? h : 0.5 * h) * std::max(1.0, std::abs(U(i)));
        Vec up = U, dn = U;
        up(i) += hh;
        dn(i) -= hh;
        dd[r] = (M(up) - M(dn)).norm() / (2.0 * hh);
      }
      worst = std::max(worst, std::min(dd[0], dd[1]));
    }
    return worst;
  };
  auto second = [&](const std::function<Mat(const Vec&)>& M, const Vec& U, int first, int count) {
    double worst = 0.0;
    for (int i = first; i < first + count; ++i) {
      Vec up = U, dn = U;
      up(i) += h_aff;
      dn(i) -= h_aff;
      if (!spec.admits(up) || !spec.admits(dn)) continue;
      Mat m0 = M(U);
      const double scale = std::max(1.0, m0.norm());
      worst = std::max(worst, (M(up) - 2.0 * m0 + M(dn)).norm() / scale);
    }
    return worst;
  };

  for (const Vec& U : U_samples) {
    if (!spec.admits(U)) throw InvalidArgument("assumption C: sample outside the phase space");
    Mat S0 = spec.S0_at(U);
    const double scale = std::max(1.0, S0.norm());
    double item1 = 0.0;
    if (n1 > 0 && n2 > 0) item1 = (S0.block(0, n1, n1, n2).norm() + S0.block(n1, 0, n2, n1).norm()) / scale;
    Mat s22 = S22(U);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s22 + s22.transpose()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) <= 0.0 || sym_residual(s22) > 1e-10 * scale) item1 = std::max(item1, 1.0);
    record(rep, "1: S0 block diagonal, S0_22 SPD", item1, 1e-10);
    record(rep, "1: S0_22 independent of U2", dmax(S22, U, n1, n2), tol_d);

    double item2 = 0.0, item3a = 0.0, item3b = 0.0, item3c = 0.0, item3d = 0.0;
    for (int a = 0; a < d; ++a) {
      item2 = std::max(item2, second([&](const Vec& V) { return Sa21(V, a); }, U, n1, n2));
      item2 = std::max(item2, second([&](const Vec& V) { return Sa22(V, a); }, U, n1, n2));
      if (n1 > 0) {
        item3a = std::max(item3a, dmax([&](const Vec& V) { return tS12(V, a); }, U, n1, n2));
        item3b = std::max(item3b, sym_residual(tS11(U, a)));
        item3c = std::max(item3c, second([&](const Vec& V) { return tS11(V, a); }, U, n1, n2));
        item3d = std::max(item3d, dmax([&](const Vec& V) { return tS11(V, a); }, U, 0, n1));
      }
    }
    record(rep, "2: S21, S22 affine in U2", item2, tol_aff);
    record(rep, "3: S0_11^-1 S12 depends on U1 only", item3a, tol_d);
    record(rep, "3: S0_11^-1 S11 symmetric", item3b, 1e-10);
    record(rep, "3: S0_11^-1 S11 affine in U2", item3c, tol_aff);
    record(rep, "3: S0_11^-1 S11 independent of U1", item3d, tol_d);

    double item4 = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        item4 = std::max(item4, dmax([&](const Vec& V) { return spec.Z_at(V, a, b); }, U, n1, n2));
    record(rep, "4: Z depends on U1 only", item4, tol_d);

    double item5 = 0.0;
    if (spec.source_uses_gradient) {
      std::vector<double> g0(static_cast<std::size_t>(n * d), 0.0);
      Vec f0(n), f1(n);
      spec.source(U.data(), g0.data(), f0.data());
      for (std::size_t i = 0; i < g0.size(); ++i) {
        auto g1 = g0;
        g1[i] = 1e-3;
        spec.source(U.data(), g1.data(), f1.data());
        item5 = std::max(item5, (f1 - f0).norm() / 1e-3);
      }
    }
    record(rep, "5: f independent of grad U", item5, tol_d);
  }
  std::vector<double> g0(static_cast<std::size_t>(n * d), 0.0);
  Vec f(n);
  spec.source(spec.U_bar.data(), g0.data(), f.data());
  record(rep, "5: f vanishes at U_bar", f.norm(), 1e-12);
  return rep;
}

EntropyReport check_entropy_dissipativity(const std::function<Mat(const Vec&)>& hessian,
                                          const std::function<Mat(const Vec&, int, int)>& Bab, int d,
                                          const std::vector<EntropySample>& samples, double floor) {
  EntropyReport rep;
  rep.omega_hat = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    Mat B = Mat::Zero(s.X.size(), s.X.size());
    double den = 0.0;
    for (int a = 0; a < d; ++a) {
      Mat Ba = Mat::Zero(s.X.size(), s.X.size());
      for (int b = 0; b < d; ++b) {
        Mat m = Bab(s.u, a, b);
        Ba += s.xi(b) * m;
        B += s.xi(a) * s.xi(b) * m;
      }
      den += (Ba * s.X).squaredNorm();
    }
    if (den <= floor) {
      ++rep.skipped;
      continue;
    }
    const double num = s.X.dot(hessian(s.u) * (B * s.X));
    const double q = num / den;
    ++rep.used;
    if (q < rep.omega_hat) {
      rep.omega_hat = q;
      rep.witness_u = s.u;
      rep.witness_xi = s.xi;
      rep.witness_X = s.X;
    }
  }
  if (rep.used == 0) {
    rep.vacuous = true;
    rep.pass = true;
    rep.omega_hat = 0.0;
    rep.note = "all denominators below floor";
    return rep;
  }
  rep.pass = rep.omega_hat > 0.0;
  if (!rep.pass) rep.note = "negative or zero ratio at witness sample";
  return rep;
}

Field full_state(const SystemSpec& spec, const Field& V) {
  if (V.components() != spec.n()) throw InvalidArgument("full_state: component count does not match the system");
  Field U = V;
  auto u = U.mutable_values();
  const std::size_t P = V.points();
  for (int c = 0; c < spec.n(); ++c)
    for (std::size_t p = 0; p < P; ++p) u[c * P + p] += spec.U_bar(c);
  return U;
}

void require_phase(const SystemSpec& spec, const Field& U, double t) {
  const std::size_t P = U.points();
  const int n = spec.n();
  std::vector<double> s(static_cast<std::size_t>(n));
  bool bad = false;
  double worst = std::numeric_limits<double>::infinity();
  std::size_t at = 0;
  std::vector<double> worst_state;
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) s[c] = U.at(c, p);
    const bool ok = spec.in_phase(s.data());
    const double dist = ok ? spec.phase_distance(s.data()) : -std::numeric_limits<double>::infinity();
    if (!ok) bad = true;
    if (dist < worst || (!ok && worst_state.empty())) {
      worst = dist;
      at = p;
      worst_state = s;
    }
  }
  if (bad) throw PhaseError(spec.name + ": state left the phase space", worst_state, at, t);
}

std::vector<Vec> sample_states(const SystemSpec& spec, const Vec& lo, const Vec& hi, std::size_t count,
                               unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  std::vector<Vec> out;
  std::size_t guard = 0;
  while (out.size() < count && guard < 100 * count + 1000) {
    ++guard;
    Vec v(lo.size());
    for (int i = 0; i < lo.size(); ++i) v(i) = lo(i) + (hi(i) - lo(i)) * U01(rng);
    if (spec.admits(v)) out.push_back(v);
  }
  return out;
}

}  // namespace hypar

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hypar/besov.hpp"
#include "hypar/errors.hpp"
#include "hypar/filter.hpp"
#include "hypar/solver.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

Field comps(const Field& V, int first, int count) { return count > 0 ? V.components_range(first, count) : Field(); }

// Largest |eigenvalue| of sum xi_a S0^-1 S^a over the grid, probing a fan of unit directions.
double acoustic_speed(const SystemSpec& spec, const Field& U) {
  const int n = spec.n(), d = spec.d;
  std::vector<Vec> dirs;
  for (int a = 0; a < d; ++a) dirs.push_back(Vec::Unit(d, a));
  if (d >= 2)
    for (int i = 1; i < 16; ++i) {
      Vec v = Vec::Zero(d);
      v(0) = std::cos(std::numbers::pi * i / 16);
      v(1) = std::sin(std::numbers::pi * i / 16);
      dirs.push_back(v);
    }
  std::vector<double> st(n), S0(static_cast<std::size_t>(n * n)), Sa(S0.size());
  double speed = 0.0;
  for (std::size_t p = 0; p < U.points(); ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    spec.S0(st.data(), S0.data());
    Eigen::Map<const Mat> S(S0.data(), n, n);
    std::vector<Mat> As;
    for (int a = 0; a < d; ++a) {
      spec.Salpha(st.data(), a, Sa.data());
      As.push_back(Eigen::Map<const Mat>(Sa.data(), n, n));
    }
    for (const Vec& xi : dirs) {
      Mat M = Mat::Zero(n, n);
      for (int a = 0; a < d; ++a) M += xi(a) * As[a];
      // S^-1/2 M S^-1/2 is symmetric for symmetric S^a, so the generalized problem is real.
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(M, S, Eigen::EigenvaluesOnly);
      speed = std::max(speed, es.eigenvalues().cwiseAbs().maxCoeff());
    }
  }
  return speed;
}

// Largest deviation of S22(U)^-1 Z^ab(U) from the constant reference, which the explicit stages must resolve.
double variable_diffusion(const SystemSpec& spec, const Field& U, const ConstantParabolicOp& op) {
  const int n = spec.n(), n1 = spec.n1, n2 = spec.n2, d = spec.d;
  std::vector<double> st(n), S0(static_cast<std::size_t>(n * n)), Z(static_cast<std::size_t>(n2 * n2));
  const Mat Sbi = op.S_bar.inverse();
  double m = 0.0;
  for (std::size_t p = 0; p < U.points(); ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    spec.S0(st.data(), S0.data());
    Eigen::Map<const Mat> S(S0.data(), n, n);
    Mat Si = S.block(n1, n1, n2, n2).inverse();
    double acc = 0.0;
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        spec.Z(st.data(), a, b, Z.data());
        Eigen::Map<const Mat> Zm(Z.data(), n2, n2);
        acc += (Si * Zm - Sbi * op.Z_bar[a * d + b]).norm();
      }
    m = std::max(m, acc);
  }
  return m;
}

struct DirectRun {
  Trajectory V;
  double dt = 0.0;
  double mean_drift = 0.0;
};

// Integrating-factor RK4 for dV/dt = -L V + N(V), L the constant parabolic part acting on V2.
DirectRun run_direct(const SystemSpec& spec, const Field& data, const ParabolicPropagator& prop, double T, double dt,
                     std::size_t stride, const Field* c3_ref, double d1) {
  const int n1 = spec.n1, n2 = spec.n2;
  stride = std::max<std::size_t>(1, stride);
  const std::size_t blocks = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(T / (dt * static_cast<double>(stride)) - 1e-9)));
  const std::size_t Nt = blocks * stride;
  const double h = T / static_cast<double>(Nt);
  auto tab_half = prop.exp_table(0.5 * h);
  auto tab_full = prop.exp_table(h);
  const GridSpec g = data.grid();

  auto applyE = [&](const Field& V, const std::vector<double>& tab) {
    Field v2 = comps(V, n1, n2);
    std::vector<cplx> sp = v2.spectrum();
    apply_mode_matrices(v2.grid(), n2, tab, sp);
    Field e2 = Field::from_spectrum(v2.grid(), sp);
    return n1 > 0 ? Field::stack({comps(V, 0, n1), e2}) : e2;
  };
  auto N = [&](const Field& V) {
    Field r = nonlinear_rhs(spec, V);
    Field gen = prop.generator(comps(V, n1, n2));
    auto rv = r.mutable_values();
    auto gv = gen.values();
    const std::size_t P = g.points();
    for (int c = 0; c < n2; ++c)
      for (std::size_t p = 0; p < P; ++p) rv[(n1 + c) * P + p] -= gv[c * P + p];
    return r;
  };

  DirectRun out;
  out.dt = h;
  out.V.scheme = "if-rk4";
  out.V.dt = h * static_cast<double>(stride);
  Field V = data;
  out.V.push(0.0, V);
  double mean0 = 0.0;
  if (n1 > 0)
    for (double v : V.component(0)) mean0 += v;
  for (std::size_t i = 0; i < Nt; ++i) {
    const double t = h * static_cast<double>(i);
    Field k1 = N(V);
    Field y = V;
    y.axpy(0.5 * h, k1);
    Field k2 = N(applyE(y, *tab_half));
    Field EV = applyE(V, *tab_half);
    y = EV;
    y.axpy(0.5 * h, k2);
    Field k3 = N(y);
    y = applyE(V, *tab_full);
    y.axpy(h, applyE(k3, *tab_half));
    Field k4 = N(y);
    Field acc = k1;
    acc *= 1.0 / 6.0;
    Field mid = k2 + k3;
    mid *= 1.0 / 3.0;
    Field nxt = applyE(V, *tab_full);
    nxt.axpy(h, applyE(acc, *tab_full));
    nxt.axpy(h, applyE(mid, *tab_half));
    nxt.axpy(h / 6.0, k4);
    V = std::move(nxt);
    const double tn = t + h;
    if (!V.finite()) throw Error("solve_critical: non-finite state at t = " + std::to_string(tn));
    const Field U = full_state(spec, V);
    require_phase(spec, U, tn);
    if (c3_ref && n1 > 0) {
      const std::size_t P = g.points();
      for (std::size_t p = 0; p < P; ++p) {
        double dev = 0.0;
        for (int c = 0; c < n1; ++c) {
          const double e = V.at(c, p) - c3_ref->at(c, p);
          dev += e * e;
        }
        if (std::sqrt(dev) > d1) {
          std::vector<double> st(static_cast<std::size_t>(spec.n()));
          for (int c = 0; c < spec.n(); ++c) st[c] = U.at(c, p);
          throw PhaseError("solve_critical: pointwise deviation of V1 exceeds d1", st, p, tn);
        }
      }
    }
    if ((i + 1) % stride == 0) out.V.push(tn, V);
  }
  if (n1 > 0) {
    double mean1 = 0.0;
    for (double v : V.component(0)) mean1 += v;
    out.mean_drift = std::abs(mean1 - mean0) / static_cast<double>(g.points());
  }
  return out;
}

}  // namespace

int critical_m(const Field& V0_1, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("critical_m: eta must lie in (0,1)");
  const int d = V0_1.grid().d;
  const auto norms = block_l2_norms(V0_1, Flavor::homogeneous);
  const auto js = filter_bank(V0_1.grid())->blocks(Flavor::homogeneous);
  const double target = 0.5 * std::sqrt(eta);
  for (int m = 0; m <= js.back() + 1; ++m) {
    double tail = 0.0;
    for (std::size_t b = 0; b < js.size(); ++b)
      if (js[b] >= m) tail += std::pow(2.0, 0.5 * d * js[b]) * norms[b];
    if (tail <= target) return m;
  }
  return js.back() + 1;
}

double critical_T(const Field& V0_2, double eta, double c, double C0, double cap) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("critical_T: eta must lie in (0,1)");
  if (!(c > 0.0) || !(C0 > 0.0) || !(cap > 0.0)) throw InvalidArgument("critical_T: constants must be positive");
  const int d = V0_2.grid().d;
  const auto norms = block_l2_norms(V0_2, Flavor::homogeneous);
  const auto js = filter_bank(V0_2.grid())->blocks(Flavor::homogeneous);
  auto F = [&](double h) {
    double acc = 0.0;
    for (std::size_t b = 0; b < js.size(); ++b)
      acc += -std::expm1(-c * std::ldexp(1.0, 2 * js[b]) * h) * std::pow(2.0, js[b] * (0.5 * d - 1.0)) * norms[b];
    return C0 * acc;
  };
  const double target = eta * eta;
  if (F(cap) <= target) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * cap; ++it) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) <= target ? lo : hi) = mid;
  }
  return lo;
}

CriticalResult solve_critical(const SystemSpec& spec, const Field& V0, const IterationConfig& cfg) {
  cfg.validate();
  if (spec.d < 2) throw InvalidArgument("solve_critical: the critical path requires d >= 2");
  if (spec.profile != AssumptionProfile::C) throw InvalidArgument("solve_critical: system must satisfy Assumption C");
  const int n = spec.n(), n1 = spec.n1, n2 = spec.n2, d = spec.d;
  if (V0.components() != n || V0.grid().d != d) throw InvalidArgument("solve_critical: data does not match system");
  if (!V0.finite()) throw InvalidArgument("solve_critical: non-finite data");
  const GridSpec g = V0.grid();
  const Field U0 = full_state(spec, V0);
  require_phase(spec, U0, 0.0);

  CriticalResult res;
  auto& diag = res.diag;
  const Field V01 = comps(V0, 0, n1), V02 = comps(V0, n1, n2);
  const ConstantParabolicOp op = ConstantParabolicOp::from_system(spec);
  ParabolicPropagator prop(op, g.with_components(n2));
  const double C0 = std::sqrt(op.cond());
  const double c = cfg.c_T0 > 0.0 ? cfg.c_T0 : op.kappa * 0.5625 / op.s_max();
  const double eta = cfg.eta;
  const double hd = 0.5 * d;

  res.m = cfg.m >= 0 ? cfg.m : (n1 > 0 ? critical_m(V01, eta) : 0);
  res.T = cfg.T > 0.0 ? cfg.T : critical_T(V02, eta, c, C0, 1.0);
  res.M1 = 1.0 + 2.0 * (n1 > 0 ? besov(V01, hd, 1.0, Flavor::homogeneous) : 0.0);
  {
    std::vector<double> st(static_cast<std::size_t>(n));
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < U0.points(); ++p) {
      for (int k = 0; k < n; ++k) st[k] = U0.at(k, p);
      dmin = std::min(dmin, spec.phase_distance_1(st.data()));
    }
    res.d1 = 0.5 * dmin;
  }

  const double speed = acoustic_speed(spec, U0);
  const double kmax = g.k0() * (g.N / 3) * std::sqrt(static_cast<double>(d));
  const double var = variable_diffusion(spec, U0, op);
  double dt = cfg.dt;
  if (speed > 0.0) dt = std::min(dt, cfg.cfl_safety * g.dx() / speed);
  if (var > 0.0) dt = std::min(dt, 2.5 * cfg.cfl_safety / (var * kmax * kmax));
  res.dt = dt;

  const double amp_div = std::max(1e-300, res.d1);
  for (int level = cfg.smoothing_levels; level >= 1; --level) {
    const int top = filter_bank(g)->j_top() + 1;
    const Field data = low_freq_cutoff(V0, top - level, Flavor::homogeneous);
    DirectRun r = run_direct(spec, data, prop, res.T, dt, cfg.snapshot_stride, nullptr, amp_div);
    IterationRecord rec;
    rec.p = cfg.smoothing_levels - level + 1;
    diag.iterations.push_back(rec);
    diag.notes.push_back("smoothing level " + std::to_string(rec.p) + " completed");
  }

  DirectRun run = run_direct(spec, V0, prop, res.T, dt, cfg.snapshot_stride, n1 > 0 ? &V01 : nullptr, res.d1);
  res.dt = run.dt;
  res.V = std::move(run.V);
  res.theta.scheme = "sources";
  res.theta.dt = res.V.dt;
  for (std::size_t i = 0; i < res.V.size(); ++i) {
    FrozenSources s = frozen_sources(spec, res.V.field(i));
    res.theta.push(res.V.time(i), n1 > 0 ? Field::stack({s.theta1, s.theta2}) : s.theta2);
  }

  IterationRecord rec;
  rec.p = cfg.smoothing_levels + 1;
  auto add = [&](const std::string& name, double v, double thr) {
    HypothesisStatus h;
    h.name = name;
    h.value = v;
    h.threshold = thr;
    h.pass = v <= thr;
    rec.hypotheses.push_back(h);
  };
  const BesovIndex crit{hd, 2.0, 1.0, Flavor::homogeneous};
  if (n1 > 0) {
    Trajectory V1 = res.V.components(0, n1);
    add("C1", chemin_lerner_norm(V1, crit, kInf).total, res.M1);
    Trajectory tail;
    tail.dt = V1.dt;
    for (std::size_t i = 0; i < V1.size(); ++i)
      tail.push(V1.time(i), V1.field(i) - low_freq_cutoff(V1.field(i), res.m + 1, Flavor::homogeneous));
    add("C2", chemin_lerner_norm(tail, crit, kInf).total, std::sqrt(eta));
    double dev = 0.0;
    for (const auto& f : V1.fields())
      for (std::size_t p = 0; p < f.points(); ++p) {
        double e2 = 0.0;
        for (int k = 0; k < n1; ++k) e2 += (f.at(k, p) - V01.at(k, p)) * (f.at(k, p) - V01.at(k, p));
        dev = std::max(dev, std::sqrt(e2));
      }
    add("C3", dev, res.d1);
  }
  Trajectory V2 = res.V.components(n1, n2);
  SplitState split = split_parabolic(V2, V02, prop);
  const BesovIndex lo{hd - 1.0, 2.0, 1.0, Flavor::homogeneous};
  const BesovIndex hi{hd + 1.0, 2.0, 1.0, Flavor::homogeneous};
  add("C4", chemin_lerner_norm(split.V_S, lo, kInf).total + lebesgue_besov_norm(split.V_S, hi, 1.0), eta);
  Trajectory dL;
  dL.dt = split.V2_L.dt;
  for (std::size_t i = 0; i < split.V2_L.size(); ++i) dL.push(split.V2_L.time(i), prop.generator(split.V2_L.field(i)));
  add("C5", lebesgue_besov_norm(dL, lo, 1.0) + lebesgue_besov_norm(split.V2_L, hi, 1.0), eta * eta);
  rec.residual = nonlinear_residual(spec, res.V);
  diag.iterations.push_back(rec);

  diag.status = rec.hypotheses_pass() ? "converged" : "hypothesis-failure";
  diag.constants["m"] = res.m;
  diag.constants["T"] = res.T;
  diag.constants["M1"] = res.M1;
  diag.constants["d1"] = res.d1;
  diag.constants["dt"] = res.dt;
  diag.constants["c"] = c;
  diag.constants["C0"] = C0;
  diag.constants["eta"] = eta;
  diag.constants["speed"] = speed;
  diag.constants["mean_drift_0"] = run.mean_drift;
  {
    double zdev = 0.0;
    const auto& V1f = res.V.back();
    if (n1 > 0) {
      Field lowU = low_freq_cutoff(comps(V1f, 0, n1), res.m + 1, Flavor::homogeneous);
      zdev = (comps(V1f, 0, n1) - lowU).linf();
    }
    diag.constants["coefficient_localization_error"] = zdev;
  }
  return res;
}

}  // namespace hypar

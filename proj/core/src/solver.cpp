#include "hypar/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "hypar/besov.hpp"
#include "hypar/errors.hpp"
#include "hypar/filter.hpp"
#include "hypar/parallel.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

double json_num(double v) { return std::isfinite(v) ? v : 0.0; }

double trapz(const std::vector<double>& t, const std::vector<double>& f) { return time_norm(t, f, 1.0); }

Field comps(const Field& V, int first, int count) { return count > 0 ? V.components_range(first, count) : Field(); }

// f - sum S^a d_a V + [0; sum d_a(Z^ab d_b V2)], dealiased.
Field balance(const SystemSpec& spec, const Field& V) {
  const int n = spec.n(), n1 = spec.n1, n2 = spec.n2, d = spec.d;
  const GridSpec g = V.grid();
  const std::size_t P = V.points();
  Field U = full_state(spec, V);
  Field grad = spectral_gradient(V);
  auto gv = grad.values();
  Field out(g);
  auto o = out.mutable_values();
  std::vector<Field> flux;
  const GridSpec g2 = g.with_components(n2);
  for (int a = 0; a < d; ++a) flux.emplace_back(g2);
  std::vector<std::span<double>> fl;
  for (auto& f : flux) fl.push_back(f.mutable_values());
  std::vector<double> st(n), gp(static_cast<std::size_t>(n * d)), f(n), Sa(static_cast<std::size_t>(n * n)),
      Z(static_cast<std::size_t>(n2 * n2));
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    for (int k = 0; k < n * d; ++k) gp[k] = gv[k * P + p];
    spec.source(st.data(), gp.data(), f.data());
    for (int r = 0; r < n; ++r) o[r * P + p] = f[r];
    for (int a = 0; a < d; ++a) {
      spec.Salpha(st.data(), a, Sa.data());
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n; ++c) acc += Sa[c * n + r] * gp[c * d + a];
        o[r * P + p] -= acc;
      }
      for (int b = 0; b < d; ++b) {
        spec.Z(st.data(), a, b, Z.data());
        for (int r = 0; r < n2; ++r) {
          double acc = 0.0;
          for (int c = 0; c < n2; ++c) acc += Z[c * n2 + r] * gp[(n1 + c) * d + b];
          fl[a][r * P + p] += acc;
        }
      }
    }
  }
  out = dealias(out);
  if (n2 > 0) {
    Field div(g2);
    for (int a = 0; a < d; ++a) div += spectral_derivative(dealias(flux[a]), a);
    auto dv = div.values();
    auto o2 = out.mutable_values();
    for (int r = 0; r < n2; ++r)
      for (std::size_t p = 0; p < P; ++p) o2[(n1 + r) * P + p] += dv[r * P + p];
  }
  return out;
}

// y = S0(U)^{+1 or -1} x pointwise, dealiased.
Field apply_S0(const SystemSpec& spec, const Field& V, const Field& x, bool inverse) {
  const int n = spec.n();
  const std::size_t P = V.points();
  Field U = full_state(spec, V);
  Field out(x.grid());
  auto o = out.mutable_values();
  auto xv = x.values();
  std::vector<double> st(n), S0(static_cast<std::size_t>(n * n));
  Vec xp(n);
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) {
      st[c] = U.at(c, p);
      xp(c) = xv[c * P + p];
    }
    spec.S0(st.data(), S0.data());
    Eigen::Map<const Mat> S(S0.data(), n, n);
    Vec y = inverse ? Vec(S.partialPivLu().solve(xp)) : Vec(S * xp);
    for (int c = 0; c < n; ++c) o[c * P + p] = y(c);
  }
  return dealias(out);
}

std::vector<double> series(const Trajectory& tr, double s, Flavor f = Flavor::nonhomogeneous) {
  return besov_series(tr, BesovIndex{s, 2.0, 1.0, f});
}

double sup_norm(const Trajectory& tr, double s, Flavor f = Flavor::nonhomogeneous) {
  double m = 0.0;
  for (double v : series(tr, s, f)) m = std::max(m, v);
  return m;
}

double l1_norm(const Trajectory& tr, double s, Flavor f = Flavor::nonhomogeneous) {
  return trapz(tr.times(), series(tr, s, f));
}

std::vector<double> nonhom_block_weights(const Field& u, double s) {
  const auto norms = block_l2_norms(u, Flavor::nonhomogeneous);
  const auto fb = filter_bank(u.grid());
  const auto js = fb->blocks(Flavor::nonhomogeneous);
  std::vector<double> a(norms.size(), 0.0);
  for (std::size_t b = 0; b < norms.size(); ++b)
    if (js[b] >= 0) a[b] = std::pow(2.0, js[b] * s) * norms[b];
  return a;
}

double min_phase_distance(const SystemSpec& spec, const Field& U) {
  const int n = spec.n();
  std::vector<double> st(n);
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < U.points(); ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    m = std::min(m, spec.phase_distance(st.data()));
  }
  return m;
}

}  // namespace

void IterationConfig::validate() const {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("iteration: eta must lie in (0,1)");
  if (!(dt > 0.0)) throw InvalidArgument("iteration: dt must be positive");
  if (!(T >= 0.0)) throw InvalidArgument("iteration: T must be non-negative");
  if (R != 0.0 && !(R >= 1.0)) throw InvalidArgument("iteration: R must be at least 1");
  if (p_max < 1) throw InvalidArgument("iteration: p_max must be at least 1");
  if (!(contraction_tol >= 0.0)) throw InvalidArgument("iteration: contraction_tol must be non-negative");
  if (!(C > 0.0)) throw InvalidArgument("iteration: C must be positive");
  if (!(c_T0 >= 0.0) || !(C_T0 >= 0.0)) throw InvalidArgument("iteration: T0 constants must be non-negative");
  if (!(cfl_safety > 0.0 && cfl_safety < 1.0)) throw InvalidArgument("iteration: cfl_safety must lie in (0,1)");
  if (snapshot_stride < 1) throw InvalidArgument("iteration: snapshot_stride must be at least 1");
  if (m < -1) throw InvalidArgument("iteration: m must be >= 0 (or -1 for automatic)");
  if (smoothing_levels < 0) throw InvalidArgument("iteration: smoothing_levels must be non-negative");
}

bool IterationRecord::hypotheses_pass() const {
  for (const auto& h : hypotheses)
    if (!h.pass) return false;
  return true;
}

double IterationDiagnostics::max_ratio(int from_p) const {
  double m = 0.0;
  for (const auto& r : iterations)
    if (r.p >= from_p && std::isfinite(r.ratio)) m = std::max(m, r.ratio);
  return m;
}

bool IterationDiagnostics::residual_monotone_to_floor(double floor_factor) const {
  if (iterations.empty()) return true;
  const double floor = floor_factor * iterations.back().residual;
  for (std::size_t i = 1; i < iterations.size(); ++i) {
    if (iterations[i - 1].residual <= floor) break;
    if (!(iterations[i].residual < iterations[i - 1].residual)) return false;
  }
  return true;
}

std::string IterationDiagnostics::to_json() const {
  nlohmann::ordered_json j;
  j["status"] = status;
  j["constants"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : constants) j["constants"][k] = json_num(v);
  j["notes"] = notes;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : iterations) {
    nlohmann::ordered_json e;
    e["p"] = r.p;
    e["X"] = json_num(r.X);
    if (std::isfinite(r.ratio))
      e["ratio"] = r.ratio;
    else
      e["ratio"] = nullptr;
    e["residual"] = json_num(r.residual);
    auto hs = nlohmann::ordered_json::array();
    for (const auto& h : r.hypotheses)
      hs.push_back({{"name", h.name}, {"value", json_num(h.value)}, {"threshold", json_num(h.threshold)},
                    {"pass", h.pass}, {"margin", json_num(h.margin())}});
    e["hypotheses"] = hs;
    arr.push_back(e);
  }
  j["iterations"] = arr;
  return j.dump(2);
}

SplitState split_parabolic(const Trajectory& V2, const Field& V2_0, const ParabolicPropagator& prop) {
  SplitState s;
  s.V2_L.scheme = "exact";
  s.V2_L.dt = V2.dt;
  s.V_S.scheme = V2.scheme;
  s.V_S.dt = V2.dt;
  for (std::size_t i = 0; i < V2.size(); ++i) {
    Field L = prop.apply(V2_0, V2.time(i) - V2.time(0));
    s.V_S.push(V2.time(i), V2.field(i) - L);
    s.V2_L.push(V2.time(i), std::move(L));
  }
  return s;
}

double compute_T0(const Field& V0_2, double s, double eta, double c, double C) {
  if (!(eta > 0.0 && eta < 1.0)) throw InvalidArgument("compute_T0: eta must lie in (0,1)");
  if (!(c > 0.0) || !(C > 0.0)) throw InvalidArgument("compute_T0: c and C must be positive");
  const double target = eta * eta / C;
  const auto a = nonhom_block_weights(V0_2, s);
  const auto js = filter_bank(V0_2.grid())->blocks(Flavor::nonhomogeneous);
  bool zero = true;
  for (double v : a) zero = zero && v == 0.0;
  if (zero) return target;
  auto lhs = [&](double h) {
    double acc = h;
    for (std::size_t b = 0; b < a.size(); ++b)
      if (a[b] > 0.0) acc += -std::expm1(-c * std::ldexp(1.0, 2 * js[b]) * h) * a[b];
    return acc;
  };
  double lo = 0.0, hi = target;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * target; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lhs(mid) <= target ? lo : hi) = mid;
  }
  return lo;
}

T0Constants fit_T0_constants(const Field& V0_2, const ConstantParabolicOp& op, double s, double horizon,
                             std::size_t samples) {
  if (!(horizon > 0.0) || samples < 2) throw InvalidArgument("fit_T0_constants: bad horizon or sample count");
  ConstantParabolicOp o = op;
  o.validate();
  T0Constants k;
  k.c = o.kappa * 0.5625 / o.s_max();
  ParabolicPropagator prop(o, V0_2.grid());
  const auto a = nonhom_block_weights(V0_2, s);
  const auto js = filter_bank(V0_2.grid())->blocks(Flavor::nonhomogeneous);
  double prev_t = 0.0, prev_g = 0.0, acc = 0.0, best = 0.0;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double t = horizon * static_cast<double>(i) / static_cast<double>(samples);
    Field V = prop.apply(V0_2, t);
    const double g = besov(prop.generator(V), s) + besov(V, s + 2.0);
    if (i > 0) {
      acc += 0.5 * (t - prev_t) * (g + prev_g);
      double bound = t;
      for (std::size_t b = 0; b < a.size(); ++b)
        if (a[b] > 0.0) bound += -std::expm1(-k.c * std::ldexp(1.0, 2 * js[b]) * t) * a[b];
      best = std::max(best, acc / bound);
    }
    prev_t = t;
    prev_g = g;
  }
  k.C = std::max(1.0, best);
  return k;
}

FrozenSources frozen_sources(const SystemSpec& spec, const Field& V) {
  const int n = spec.n(), n1 = spec.n1, d = spec.d;
  const std::size_t P = V.points();
  Field U = full_state(spec, V);
  Field grad = spectral_gradient(V);
  auto gv = grad.values();
  Field th(V.grid());
  auto o = th.mutable_values();
  std::vector<double> st(n), gp(static_cast<std::size_t>(n * d)), f(n), Sa(static_cast<std::size_t>(n * n));
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    for (int k = 0; k < n * d; ++k) gp[k] = gv[k * P + p];
    spec.source(st.data(), gp.data(), f.data());
    for (int r = 0; r < n; ++r) o[r * P + p] = f[r];
    for (int a = 0; a < d; ++a) {
      spec.Salpha(st.data(), a, Sa.data());
      for (int r = 0; r < n; ++r) {
        double acc = 0.0;
        for (int c = (r < n1 ? n1 : 0); c < n; ++c) acc += Sa[c * n + r] * gp[c * d + a];
        o[r * P + p] -= acc;
      }
    }
  }
  th = dealias(th);
  FrozenSources s;
  s.theta1 = comps(th, 0, n1);
  s.theta2 = comps(th, n1, spec.n2);
  return s;
}

Field nonlinear_rhs(const SystemSpec& spec, const Field& V) {
  if (V.components() != spec.n()) throw InvalidArgument("nonlinear_rhs: state does not match system");
  return apply_S0(spec, V, balance(spec, V), true);
}

double nonlinear_residual(const SystemSpec& spec, const Trajectory& V) {
  if (V.size() < 2) return 0.0;
  Trajectory dV = V.time_derivative();
  std::vector<double> r(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) {
    Field res = apply_S0(spec, V.field(i), dV.field(i), false);
    res -= balance(spec, V.field(i));
    r[i] = res.l2();
  }
  return trapz(V.times(), r);
}

std::vector<HypothesisStatus> check_hypotheses_subcritical(const SystemSpec& spec, const Trajectory& V,
                                                           const SplitState& split, const IterationConfig& cfg,
                                                           double R, const PhaseRegion& phase) {
  const double s = cfg.s, eta = cfg.eta;
  const int n1 = spec.n1, n2 = spec.n2;
  std::vector<HypothesisStatus> out;
  auto add = [&](const std::string& name, double v, double thr, bool lower = false) {
    HypothesisStatus h;
    h.name = name;
    h.value = v;
    h.threshold = thr;
    h.lower_bound = lower;
    h.pass = lower ? v >= thr : v <= thr;
    out.push_back(h);
  };
  double h1 = 0.0;
  if (n1 > 0) h1 = sup_norm(V.components(0, n1), s + 1.0);
  h1 = std::max(h1, sup_norm(V.components(n1, n2), s));
  add("H1", h1, R);
  Trajectory dL = split.V2_L.time_derivative();
  add("H2", l1_norm(dL, s) + l1_norm(split.V2_L, s + 2.0), eta * eta);
  Trajectory dS = split.V_S.time_derivative();
  add("H3", sup_norm(split.V_S, s) + l1_norm(split.V_S, s + 2.0) + l1_norm(dS, s), eta);
  add("H4", l1_norm(V.time_derivative(), s), std::sqrt(eta));
  double dist = std::numeric_limits<double>::infinity();
  for (const auto& f : V.fields()) dist = std::min(dist, min_phase_distance(spec, full_state(spec, f)));
  add("H5", dist, phase.margin, true);
  return out;
}

IterationResult iterate_subcritical(const SystemSpec& spec, const Field& V0, const IterationConfig& cfg) {
  cfg.validate();
  const int n = spec.n(), n1 = spec.n1, n2 = spec.n2;
  if (n2 < 1) throw InvalidArgument("iterate_subcritical: system has no parabolic part");
  if (V0.components() != n || V0.grid().d != spec.d) throw InvalidArgument("iterate_subcritical: data does not match system");
  if (!V0.finite()) throw InvalidArgument("iterate_subcritical: non-finite data");
  const GridSpec g = V0.grid();
  const Field U0 = full_state(spec, V0);
  require_phase(spec, U0, 0.0);
  IterationResult res;
  auto& diag = res.diag;
  if (cfg.s < 0.5 * spec.d) diag.notes.push_back("s below d/2: outside the subcritical theory");
  if (spec.d == 1 && std::abs(cfg.s - 0.5) < 1e-12) diag.notes.push_back("d = 1, s = 1/2 endpoint run on the generic path");

  const ConstantParabolicOp op = ConstantParabolicOp::from_system(spec);
  auto prop = std::make_shared<ParabolicPropagator>(op, g.with_components(n2));
  const Field V01 = comps(V0, 0, n1), V02 = comps(V0, n1, n2);

  double C0 = std::sqrt(op.cond());
  if (n1 > 0) {
    Mat S11 = spec.S0_at(spec.U_bar).block(0, 0, n1, n1);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S11 + S11.transpose()), Eigen::EigenvaluesOnly);
    C0 = std::max(C0, std::sqrt(es.eigenvalues()(n1 - 1) / es.eigenvalues()(0)));
  }
  diag.constants["C0"] = C0;

  double T = cfg.T;
  if (T <= 0.0) {
    T0Constants k = fit_T0_constants(V02, op, cfg.s);
    if (cfg.c_T0 > 0.0) k.c = cfg.c_T0;
    if (cfg.C_T0 > 0.0) k.C = cfg.C_T0;
    T = compute_T0(V02, cfg.s, cfg.eta, k.c, k.C);
    diag.constants["c_T0"] = k.c;
    diag.constants["C_T0"] = k.C;
    diag.constants["T0"] = T;
  }
  double R = cfg.R;
  if (R <= 0.0) {
    const double a = n1 > 0 ? besov(V01, cfg.s + 1.0) : 0.0;
    R = std::max(1.0, 2.0 * C0 * std::max(a, besov(V02, cfg.s)));
  }
  const double eps = 1.0 / (4.0 * cfg.C);
  const std::size_t Nt = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / cfg.dt - 1e-9)));
  const double h = T / static_cast<double>(Nt);
  diag.constants["T"] = T;
  diag.constants["R"] = R;
  diag.constants["eta"] = cfg.eta;
  diag.constants["eps"] = eps;
  diag.constants["dt"] = h;
  diag.constants["s"] = cfg.s;
  res.T = T;
  res.R = R;

  PhaseRegion region{0.5 * min_phase_distance(spec, U0)};
  diag.constants["phase_margin"] = region.margin;

  std::vector<double> times(Nt + 1);
  for (std::size_t i = 0; i <= Nt; ++i) times[i] = h * static_cast<double>(i);
  auto make_traj = [&](const std::vector<Field>& fs, const std::string& scheme) {
    Trajectory tr;
    tr.scheme = scheme;
    tr.dt = h;
    tr.reserve(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) tr.push(times[i], fs[i]);
    return tr;
  };

  // V_0: transported part frozen at S_0 V0^1, parabolic part from the exact propagator.
  std::vector<Field> cur(Nt + 1);
  {
    const Field d0 = low_freq_cutoff(V0, 0, Flavor::nonhomogeneous);
    const Field d01 = comps(d0, 0, n1), d02 = comps(d0, n1, n2);
    for (std::size_t i = 0; i <= Nt; ++i) {
      Field v2 = prop->apply(d02, times[i]);
      cur[i] = n1 > 0 ? Field::stack({d01, v2}) : v2;
    }
  }
  std::vector<Field> prev;
  std::vector<Field> theta_prev;

  FrozenCoeffStep hstep{Scheme::rk4, h, cfg.cfl_safety};
  FrozenCoeffStep pstep{Scheme::integrating_factor, h, cfg.cfl_safety};
  double prev_X = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  for (int p = 0; p < cfg.p_max; ++p) {
    const Field data = low_freq_cutoff(V0, p + 1, Flavor::nonhomogeneous);
    std::vector<FrozenSources> src(Nt + 1);
    for (std::size_t i = 0; i <= Nt; ++i) src[i] = frozen_sources(spec, cur[i]);
    std::vector<Field> next(Nt + 1);
    next[0] = data;
    Field v1 = comps(data, 0, n1), v2 = comps(data, n1, n2);
    for (std::size_t i = 0; i < Nt; ++i) {
      Field Vm = cur[i] + cur[i + 1];
      Vm *= 0.5;
      const Field Um = full_state(spec, Vm);
      require_phase(spec, Um, times[i] + 0.5 * h);
      if (n1 > 0) {
        HyperbolicOperator hop(spec, Um);
        Field th_m = src[i].theta1 + src[i + 1].theta1;
        th_m *= 0.5;
        v1 = step_linear_hyperbolic(v1, hop, src[i].theta1, th_m, src[i + 1].theta1, hstep);
      }
      ParabolicOperator pop(spec, Um, prop);
      v2 = step_linear_parabolic_variable(v2, pop, src[i].theta2, src[i + 1].theta2, pstep);
      next[i + 1] = n1 > 0 ? Field::stack({v1, v2}) : v2;
      if (!next[i + 1].finite()) throw Error("iterate_subcritical: non-finite iterate");
    }
    Trajectory tn = make_traj(next, "rk4+if-rk2");
    std::vector<Field> diff(Nt + 1);
    for (std::size_t i = 0; i <= Nt; ++i) diff[i] = next[i] - cur[i];
    Trajectory td = make_traj(diff, "difference");
    double X = 0.0;
    if (n1 > 0) X += eps / R * sup_norm(td.components(0, n1), cfg.s);
    Trajectory td2 = td.components(n1, n2);
    X += sup_norm(td2, cfg.s - 1.0) + l1_norm(td2, cfg.s + 1.0);

    IterationRecord rec;
    rec.p = p + 1;
    rec.X = X;
    if (std::isfinite(prev_X) && prev_X > 1e-300) rec.ratio = X / prev_X;
    rec.residual = nonlinear_residual(spec, tn);
    SplitState split = split_parabolic(tn.components(n1, n2), comps(data, n1, n2), *prop);
    rec.hypotheses = check_hypotheses_subcritical(spec, tn, split, cfg, R, region);
    diag.iterations.push_back(rec);

    theta_prev.assign(Nt + 1, Field());
    for (std::size_t i = 0; i <= Nt; ++i)
      theta_prev[i] = n1 > 0 ? Field::stack({src[i].theta1, src[i].theta2}) : src[i].theta2;
    prev = std::move(cur);
    cur = std::move(next);
    prev_X = X;
    if (X <= cfg.contraction_tol) {
      converged = true;
      break;
    }
  }

  const bool hyp_ok = diag.iterations.back().hypotheses_pass();
  diag.status = !hyp_ok ? "hypothesis-failure" : (converged ? "converged" : "cap");
  if (!converged) diag.notes.push_back("iteration cap reached before the contraction tolerance");

  const std::size_t stride = cfg.snapshot_stride;
  res.V = make_traj(cur, "rk4+if-rk2").subsample(stride);
  res.U_prev = make_traj(prev, "rk4+if-rk2").subsample(stride);
  res.theta = make_traj(theta_prev, "sources").subsample(stride);

  double m0 = 0.0, m1 = 0.0;
  if (n1 > 0) {
    for (double v : cur.front().component(0)) m0 += v;
    for (double v : cur.back().component(0)) m1 += v;
    diag.constants["mean_drift_0"] = std::abs(m1 - m0) / static_cast<double>(g.points());
  }
  return res;
}

ContinuationSeries continuation_monitor(const Trajectory& V, const SystemSpec& spec) {
  ContinuationSeries out;
  out.reduced_applicable = spec.profile == AssumptionProfile::C;
  if (V.empty()) return out;
  const int n = spec.n(), n1 = spec.n1, n2 = spec.n2, d = spec.d;
  const GridSpec g = V.grid();
  const std::size_t P = g.points();
  const std::size_t K = V.size();

  // Coefficient fields S0_11(U), S^a_11(U), S0_22(U) sampled along the trajectory.
  Trajectory s011, s022;
  std::vector<Trajectory> sa11(static_cast<std::size_t>(d));
  std::vector<double> st(n), S0(static_cast<std::size_t>(n * n)), Sa(S0.size());
  for (std::size_t i = 0; i < K; ++i) {
    Field U = full_state(spec, V.field(i));
    Field f11(g.with_components(std::max(1, n1 * n1))), f22(g.with_components(n2 * n2));
    std::vector<Field> fa(static_cast<std::size_t>(d), Field(g.with_components(std::max(1, n1 * n1))));
    auto v11 = f11.mutable_values();
    auto v22 = f22.mutable_values();
    std::vector<std::span<double>> va;
    for (auto& f : fa) va.push_back(f.mutable_values());
    for (std::size_t p = 0; p < P; ++p) {
      for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
      spec.S0(st.data(), S0.data());
      for (int r = 0; r < n1; ++r)
        for (int c = 0; c < n1; ++c) v11[(r * n1 + c) * P + p] = S0[c * n + r];
      for (int r = 0; r < n2; ++r)
        for (int c = 0; c < n2; ++c) v22[(r * n2 + c) * P + p] = S0[(n1 + c) * n + n1 + r];
      for (int a = 0; a < d; ++a) {
        spec.Salpha(st.data(), a, Sa.data());
        for (int r = 0; r < n1; ++r)
          for (int c = 0; c < n1; ++c) va[a][(r * n1 + c) * P + p] = Sa[c * n + r];
      }
    }
    s011.push(V.time(i), std::move(f11));
    s022.push(V.time(i), std::move(f22));
    for (int a = 0; a < d; ++a) sa11[a].push(V.time(i), std::move(fa[a]));
  }
  Trajectory d011 = s011.time_derivative(), d022 = s022.time_derivative();

  auto pointwise_max = [&](const Field& f) {
    double m = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      double acc = 0.0;
      for (int c = 0; c < f.components(); ++c) acc += f.at(c, p) * f.at(c, p);
      m = std::max(m, acc);
    }
    return std::sqrt(m);
  };

  std::vector<double> q(K), qr(K);
  out.t = V.times();
  out.sup_grad_v1.resize(K);
  double sup1 = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    Field grad = spectral_gradient(V.field(i));
    const double gall = pointwise_max(grad);
    const double g1 = n1 > 0 ? pointwise_max(grad.components_range(0, n1 * d)) : 0.0;
    const double g2 = pointwise_max(grad.components_range(n1 * d, n2 * d));
    double div = 0.0;
    if (n1 > 0) {
      Field dv = d011.field(i);
      for (int a = 0; a < d; ++a) dv += spectral_derivative(dealias(sa11[a].field(i)), a);
      div = pointwise_max(dv);
    }
    q[i] = gall * gall + div + pointwise_max(d022.field(i));
    qr[i] = g1 * g1 + g2;
    sup1 = std::max(sup1, g1);
    out.sup_grad_v1[i] = sup1;
  }
  out.integral.assign(K, 0.0);
  out.reduced.assign(K, 0.0);
  for (std::size_t i = 1; i < K; ++i) {
    const double dt = out.t[i] - out.t[i - 1];
    out.integral[i] = out.integral[i - 1] + 0.5 * dt * (q[i] + q[i - 1]);
    out.reduced[i] = out.reduced[i - 1] + 0.5 * dt * (qr[i] + qr[i - 1]);
  }
  return out;
}

DependenceReport continuous_dependence_experiment(const SystemSpec& spec, const Field& V0, const Field& perturbation,
                                                  const std::vector<double>& eps, const IterationConfig& cfg) {
  if (perturbation.components() != V0.components() || !perturbation.grid().same_mesh(V0.grid()))
    throw InvalidArgument("continuous dependence: perturbation does not match data");
  IterationResult base = iterate_subcritical(spec, V0, cfg);
  IterationConfig c2 = cfg;
  c2.T = base.T;
  c2.R = base.R;
  const int n1 = spec.n1, n2 = spec.n2;
  DependenceReport rep;
  rep.entries.resize(eps.size());
  parallel_for(eps.size(), [&](std::size_t k) {
    DependenceEntry& e = rep.entries[k];
    e.eps = eps[k];
    if (eps[k] == 0.0) {
      e.converged = true;
      e.note = "zero perturbation";
      return;
    }
    try {
      Field data = V0;
      data.axpy(eps[k], perturbation);
      IterationResult r = iterate_subcritical(spec, data, c2);
      const auto& it = r.diag.iterations.back();
      e.converged = it.X <= c2.contraction_tol;
      if (!e.converged) e.note = "perturbed run did not reach the contraction tolerance";
      for (std::size_t i = 0; i < r.V.size(); ++i) {
        Field dv = r.V.field(i) - base.V.field(i);
        double w = besov(dv.components_range(n1, n2), cfg.s - 1.0);
        if (n1 > 0) w += besov(dv.components_range(0, n1), cfg.s);
        e.sup_weak = std::max(e.sup_weak, w);
      }
      e.ratio = e.sup_weak / std::abs(eps[k]);
    } catch (const std::exception& ex) {
      e.converged = false;
      e.note = ex.what();
    }
  });
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  int used = 0;
  for (const auto& e : rep.entries)
    if (e.converged && e.eps != 0.0) {
      lo = std::min(lo, e.ratio);
      hi = std::max(hi, e.ratio);
      ++used;
    }
  rep.variation = used > 0 && lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  rep.pass = used >= 2 && rep.variation < 3.0;
  return rep;
}

}  // namespace hypar

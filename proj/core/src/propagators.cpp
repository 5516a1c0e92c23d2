#include "hypar/propagators.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "hypar/besov.hpp"
#include "hypar/errors.hpp"
#include "hypar/filter.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

// Unit directions used to probe symbols; coordinate axes always included.
std::vector<Vec> probe_directions(int d, int per_plane) {
  std::vector<Vec> out;
  for (int a = 0; a < d; ++a) out.push_back(Vec::Unit(d, a));
  if (d == 2) {
    for (int i = 1; i < per_plane; ++i) {
      const double th = std::numbers::pi * i / per_plane;
      Vec v(2);
      v << std::cos(th), std::sin(th);
      out.push_back(v);
    }
  } else if (d == 3) {
    const int n = per_plane * 4;
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - (2.0 * i + 1.0) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double ph = i * std::numbers::pi * (3.0 - std::sqrt(5.0));
      Vec v(3);
      v << r * std::cos(ph), r * std::sin(ph), z;
      out.push_back(v);
    }
  }
  return out;
}

Mat sym_sqrt(const Mat& S, bool inverse) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  Vec ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = inverse ? 1.0 / std::sqrt(ev(i)) : std::sqrt(ev(i));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

bool empty_field(const Field& f) { return f.values().empty(); }

}  // namespace

ConstantParabolicOp ConstantParabolicOp::from_system(const SystemSpec& spec) {
  ConstantParabolicOp op;
  op.d = spec.d;
  op.n2 = spec.n2;
  op.S_bar = spec.S0_at(spec.U_bar).block(spec.n1, spec.n1, spec.n2, spec.n2);
  for (int a = 0; a < spec.d; ++a)
    for (int b = 0; b < spec.d; ++b) op.Z_bar.push_back(spec.Z_at(spec.U_bar, a, b));
  op.validate();
  return op;
}

ConstantParabolicOp ConstantParabolicOp::heat(int d, int n2, double diffusivity) {
  ConstantParabolicOp op;
  op.d = d;
  op.n2 = n2;
  op.S_bar = Mat::Identity(n2, n2);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) op.Z_bar.push_back(a == b ? Mat(diffusivity * Mat::Identity(n2, n2)) : Mat(Mat::Zero(n2, n2)));
  op.validate();
  return op;
}

Mat ConstantParabolicOp::symbol(const double* xi) const {
  Mat s = Mat::Zero(n2, n2);
  double r2 = 0.0;
  for (int a = 0; a < d; ++a) {
    r2 += xi[a] * xi[a];
    for (int b = 0; b < d; ++b) s += xi[a] * xi[b] * Z_bar[a * d + b];
  }
  if (gamma != 2.0 && r2 > 0.0) s *= std::pow(r2, 0.5 * (gamma - 2.0));
  return s;
}

void ConstantParabolicOp::validate() {
  if (d < 1 || d > 3 || n2 < 1) throw InvalidArgument("parabolic operator: bad dimensions");
  if (S_bar.rows() != n2 || S_bar.cols() != n2) throw InvalidArgument("parabolic operator: S_bar has wrong shape");
  if (static_cast<int>(Z_bar.size()) != d * d) throw InvalidArgument("parabolic operator: need d*d diffusion matrices");
  if ((S_bar - S_bar.transpose()).norm() > 1e-12 * std::max(1.0, S_bar.norm()))
    throw InvalidArgument("parabolic operator: S_bar not symmetric");
  if (s_min() <= 0.0) throw InvalidArgument("parabolic operator: S_bar not positive definite");
  if (!(gamma > 0.0)) throw InvalidArgument("parabolic operator: gamma must be positive");
  kappa = std::numeric_limits<double>::infinity();
  Lambda = 0.0;
  for (const Vec& xi : probe_directions(d, 32)) {
    Mat s = symbol(xi.data());
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
    kappa = std::min(kappa, es.eigenvalues()(0));
    Lambda = std::max(Lambda, es.eigenvalues()(n2 - 1));
  }
  if (!(kappa > 0.0)) throw InvalidArgument("parabolic operator: symbol is not elliptic");
}

double ConstantParabolicOp::s_min() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(S_bar, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double ConstantParabolicOp::s_max() const {
  Eigen::SelfAdjointEigenSolver<Mat> es(S_bar, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(n2 - 1);
}

double ConstantParabolicOp::cond() const { return s_max() / s_min(); }

ParabolicPropagator::ParabolicPropagator(const ConstantParabolicOp& op, const GridSpec& g) : op_(op), g_(g), n2_(op.n2) {
  g_.validate();
  if (g.d != op.d) throw InvalidArgument("parabolic propagator: grid dimension mismatch");
  auto ft = freq_table(g);
  const std::size_t M = g.modes();
  const int n = n2_;
  P_.assign(M * n * n, 0.0);
  Pinv_.assign(M * n * n, 0.0);
  lam_.assign(M * n, 0.0);
  gen_.assign(M * n * n, 0.0);
  const Mat Sh = sym_sqrt(op.S_bar, false);
  const Mat Sih = sym_sqrt(op.S_bar, true);
  const Mat Sinv = op.S_bar.inverse();
  std::vector<double> xi(static_cast<std::size_t>(g.d));
  for (std::size_t m = 0; m < M; ++m) {
    for (int a = 0; a < g.d; ++a) xi[a] = (ft->nyq_mask[m] >> a) & 1u ? 0.0 : ft->xi_of(m)[a];
    Mat Zs = op.symbol(xi.data());
    Mat G = Sinv * Zs;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) gen_[m * n * n + r * n + c] = G(r, c);
    if ((Zs - Zs.transpose()).norm() <= 1e-13 * std::max(1.0, Zs.norm())) {
      Eigen::SelfAdjointEigenSolver<Mat> es(Sih * Zs * Sih);
      Mat P = Sih * es.eigenvectors();
      Mat Pi = es.eigenvectors().transpose() * Sh;
      for (int r = 0; r < n; ++r) {
        lam_[m * n + r] = es.eigenvalues()(r);
        for (int c = 0; c < n; ++c) {
          P_[m * n * n + r * n + c] = P(r, c);
          Pinv_[m * n * n + r * n + c] = Pi(r, c);
        }
      }
    } else {
      pade_modes_.push_back(m);
    }
  }
}

std::shared_ptr<const std::vector<double>> ParabolicPropagator::exp_table(double t) const {
  {
    std::lock_guard<std::mutex> lk(mu_);
    for (const auto& [tt, tab] : tables_)
      if (tt == t) return tab;
  }
  const std::size_t M = g_.modes();
  const int n = n2_;
  auto tab = std::make_shared<std::vector<double>>(M * n * n, 0.0);
  auto& E = *tab;
  std::vector<double> e(static_cast<std::size_t>(n));
  for (std::size_t m = 0; m < M; ++m) {
    const double* P = &P_[m * n * n];
    const double* Pi = &Pinv_[m * n * n];
    for (int k = 0; k < n; ++k) e[k] = std::exp(-t * lam_[m * n + k]);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += P[r * n + k] * e[k] * Pi[k * n + c];
        E[m * n * n + r * n + c] = acc;
      }
  }
  for (std::size_t m : pade_modes_) {
    Mat G(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) G(r, c) = gen_[m * n * n + r * n + c];
    Mat X = (-t * G).exp();
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) E[m * n * n + r * n + c] = X(r, c);
  }
  std::shared_ptr<const std::vector<double>> out = tab;
  std::lock_guard<std::mutex> lk(mu_);
  tables_.emplace_back(t, out);
  if (tables_.size() > 4) tables_.erase(tables_.begin());
  return out;
}

void apply_mode_matrices(const GridSpec& g, int n2, const std::vector<double>& table, std::vector<cplx>& spec) {
  const std::size_t M = g.modes();
  if (spec.size() != M * n2 || table.size() != M * n2 * n2) throw InvalidArgument("mode matrices: size mismatch");
  std::vector<cplx> tmp(static_cast<std::size_t>(n2));
  for (std::size_t m = 0; m < M; ++m) {
    const double* E = &table[m * n2 * n2];
    for (int r = 0; r < n2; ++r) {
      cplx acc = 0.0;
      for (int c = 0; c < n2; ++c) acc += E[r * n2 + c] * spec[c * M + m];
      tmp[r] = acc;
    }
    for (int r = 0; r < n2; ++r) spec[r * M + m] = tmp[r];
  }
}

Field ParabolicPropagator::apply(const Field& V, double t) const {
  if (!V.grid().same_mesh(g_) || V.components() != n2_) throw InvalidArgument("parabolic propagator: field does not match");
  if (t == 0.0) return V;
  auto tab = exp_table(t);
  std::vector<cplx> spec = V.spectrum();
  apply_mode_matrices(g_, n2_, *tab, spec);
  return Field::from_spectrum(V.grid(), spec);
}

Field ParabolicPropagator::generator(const Field& V) const {
  if (!V.grid().same_mesh(g_) || V.components() != n2_) throw InvalidArgument("parabolic propagator: field does not match");
  std::vector<cplx> spec = V.spectrum();
  std::vector<double> neg(gen_.size());
  for (std::size_t i = 0; i < gen_.size(); ++i) neg[i] = -gen_[i];
  apply_mode_matrices(g_, n2_, neg, spec);
  return Field::from_spectrum(V.grid(), spec);
}

Trajectory solve_constant_parabolic(const Field& V0, const ConstantParabolicOp& op, double T, std::size_t samples) {
  if (!(T >= 0.0) || samples == 0) throw InvalidArgument("solve_constant_parabolic: need T >= 0 and samples >= 1");
  ConstantParabolicOp o = op;
  o.validate();
  if (V0.components() != o.n2) throw InvalidArgument("solve_constant_parabolic: data must have n2 components");
  ParabolicPropagator prop(o, V0.grid());
  Trajectory traj;
  traj.scheme = "exact";
  traj.dt = T / static_cast<double>(samples);
  traj.reserve(samples + 1);
  for (std::size_t i = 0; i <= samples; ++i) {
    const double t = T * static_cast<double>(i) / static_cast<double>(samples);
    traj.push(t, prop.apply(V0, t));
  }
  return traj;
}

HyperbolicOperator::HyperbolicOperator(const SystemSpec& spec, const Field& U)
    : g_(U.grid().with_components(spec.n1)), n1_(spec.n1), d_(spec.d) {
  if (U.components() != spec.n() || U.grid().d != spec.d) throw InvalidArgument("hyperbolic operator: state does not match system");
  require_phase(spec, U);
  if (n1_ == 0) return;
  const std::size_t P = U.points();
  const int n = spec.n(), m = n1_;
  A_.assign(P * d_ * m * m, 0.0);
  Sinv_.assign(P * m * m, 0.0);
  std::vector<double> st(static_cast<std::size_t>(n)), S0(static_cast<std::size_t>(n * n)), Sa(S0.size());
  const auto dirs = probe_directions(d_, 16);
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    spec.S0(st.data(), S0.data());
    Eigen::Map<const Mat> S0m(S0.data(), n, n);
    Mat Si = S0m.block(0, 0, m, m).inverse();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) Sinv_[p * m * m + r * m + c] = Si(r, c);
    std::vector<Mat> As;
    for (int a = 0; a < d_; ++a) {
      spec.Salpha(st.data(), a, Sa.data());
      Eigen::Map<const Mat> Sam(Sa.data(), n, n);
      Mat A = Si * Sam.block(0, 0, m, m);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) A_[((p * d_ + a) * m + r) * m + c] = A(r, c);
      As.push_back(A);
    }
    for (const Vec& xi : dirs) {
      Mat sym = Mat::Zero(m, m);
      for (int a = 0; a < d_; ++a) sym += xi(a) * As[a];
      if (m == 1) {
        speed_ = std::max(speed_, std::abs(sym(0, 0)));
      } else {
        Eigen::EigenSolver<Mat> es(sym, false);
        speed_ = std::max(speed_, es.eigenvalues().cwiseAbs().maxCoeff());
      }
    }
  }
}

double HyperbolicOperator::admissible_dt(double safety) const {
  if (speed_ <= 0.0) return std::numeric_limits<double>::infinity();
  return safety * g_.dx() / speed_;
}

Field HyperbolicOperator::rhs(const Field& V1, const Field& theta) const {
  if (V1.components() != n1_ || !V1.grid().same_mesh(g_)) throw InvalidArgument("hyperbolic rhs: field does not match");
  Field out(g_);
  if (n1_ == 0) return out;
  const std::size_t P = g_.points();
  const int m = n1_;
  Field grad = spectral_gradient(V1);
  auto o = out.mutable_values();
  auto gv = grad.values();
  for (std::size_t p = 0; p < P; ++p)
    for (int r = 0; r < m; ++r) {
      double acc = 0.0;
      for (int a = 0; a < d_; ++a)
        for (int c = 0; c < m; ++c) acc -= A_[((p * d_ + a) * m + r) * m + c] * gv[(c * d_ + a) * P + p];
      o[r * P + p] = acc;
    }
  if (!empty_field(theta)) {
    if (theta.components() != m || !theta.grid().same_mesh(g_)) throw InvalidArgument("hyperbolic rhs: source does not match");
    auto tv = theta.values();
    for (std::size_t p = 0; p < P; ++p)
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int c = 0; c < m; ++c) acc += Sinv_[p * m * m + r * m + c] * tv[c * P + p];
        o[r * P + p] += acc;
      }
  }
  return dealias(out);
}

Field step_linear_hyperbolic(const Field& V1, const HyperbolicOperator& op, const Field& theta_a, const Field& theta_m,
                             const Field& theta_b, const FrozenCoeffStep& step) {
  if (!(step.cfl_safety > 0.0 && step.cfl_safety < 1.0)) throw InvalidArgument("hyperbolic step: cfl_safety must lie in (0,1)");
  if (!(step.dt > 0.0)) throw InvalidArgument("hyperbolic step: dt must be positive");
  const double adm = op.admissible_dt(step.cfl_safety);
  if (step.dt > adm) throw CflError("hyperbolic step: dt exceeds the CFL limit", adm);
  const double h = step.dt;
  Field k1 = op.rhs(V1, theta_a);
  Field y = V1;
  y.axpy(0.5 * h, k1);
  Field k2 = op.rhs(y, theta_m);
  y = V1;
  y.axpy(0.5 * h, k2);
  Field k3 = op.rhs(y, theta_m);
  y = V1;
  y.axpy(h, k3);
  Field k4 = op.rhs(y, theta_b);
  Field out = V1;
  out.axpy(h / 6.0, k1);
  out.axpy(h / 3.0, k2);
  out.axpy(h / 3.0, k3);
  out.axpy(h / 6.0, k4);
  return out;
}

Field step_linear_hyperbolic(const Field& V1, const SystemSpec& spec, const Field& U, const Field& theta,
                             const FrozenCoeffStep& step) {
  HyperbolicOperator op(spec, U);
  return step_linear_hyperbolic(V1, op, theta, theta, theta, step);
}

ParabolicOperator::ParabolicOperator(const SystemSpec& spec, const Field& U, std::shared_ptr<const ParabolicPropagator> prop)
    : g_(U.grid().with_components(spec.n2)), n1_(spec.n1), n2_(spec.n2), d_(spec.d), prop_(std::move(prop)) {
  if (U.components() != spec.n() || U.grid().d != spec.d) throw InvalidArgument("parabolic operator: state does not match system");
  if (!prop_ || !prop_->grid().same_mesh(g_)) throw InvalidArgument("parabolic operator: propagator grid mismatch");
  require_phase(spec, U);
  const std::size_t P = U.points();
  const int n = spec.n(), m = n2_, d = d_;
  Sinv_.assign(P * m * m, 0.0);
  Z_.assign(P * d * d * m * m, 0.0);
  std::vector<double> st(static_cast<std::size_t>(n)), S0(static_cast<std::size_t>(n * n)), Zb(static_cast<std::size_t>(m * m));
  const auto& op = prop_->op();
  const Mat Sbar = op.S_bar;
  const double tol = 1e-15;
  constant_ = true;
  c1_ = std::numeric_limits<double>::infinity();
  const auto dirs = probe_directions(d, 8);
  std::vector<Mat> Zp(static_cast<std::size_t>(d * d));
  for (std::size_t p = 0; p < P; ++p) {
    for (int c = 0; c < n; ++c) st[c] = U.at(c, p);
    spec.S0(st.data(), S0.data());
    Eigen::Map<const Mat> S0m(S0.data(), n, n);
    Mat S22 = S0m.block(n1_, n1_, m, m);
    if ((S22 - Sbar).norm() > tol * std::max(1.0, Sbar.norm())) constant_ = false;
    Mat Si = S22.inverse();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) Sinv_[p * m * m + r * m + c] = Si(r, c);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        spec.Z(st.data(), a, b, Zb.data());
        Eigen::Map<const Mat> Zm(Zb.data(), m, m);
        Zp[a * d + b] = Zm;
        if ((Zp[a * d + b] - op.Z_bar[a * d + b]).norm() > tol * std::max(1.0, op.Z_bar[a * d + b].norm())) constant_ = false;
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < m; ++c) Z_[(((p * d + a) * d + b) * m + r) * m + c] = Zm(r, c);
      }
    for (const Vec& xi : dirs) {
      Mat s = Mat::Zero(m, m);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) s += xi(a) * xi(b) * Zp[a * d + b];
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.transpose()), Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues()(0);
      if (!(lo > 0.0))
        throw InvalidArgument("parabolic operator: ellipticity fails at grid point " + std::to_string(p));
      c1_ = std::min(c1_, lo);
    }
  }
}

ParabolicOperator::ParabolicOperator(const SystemSpec& spec, const Field& U)
    : ParabolicOperator(spec, U,
                        std::make_shared<ParabolicPropagator>(ConstantParabolicOp::from_system(spec),
                                                              U.grid().with_components(spec.n2))) {}

Field ParabolicOperator::explicit_part(const Field& V2, const Field& theta) const {
  if (V2.components() != n2_ || !V2.grid().same_mesh(g_)) throw InvalidArgument("parabolic operator: field does not match");
  const std::size_t P = g_.points();
  const int m = n2_, d = d_;
  const bool has_theta = !empty_field(theta);
  if (has_theta && (theta.components() != m || !theta.grid().same_mesh(g_)))
    throw InvalidArgument("parabolic operator: source does not match");
  Field out(g_);
  auto o = out.mutable_values();
  if (constant_) {
    if (!has_theta) return out;
    const Mat Si = prop_->op().S_bar.inverse();
    auto tv = theta.values();
    for (std::size_t p = 0; p < P; ++p)
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int c = 0; c < m; ++c) acc += Si(r, c) * tv[c * P + p];
        o[r * P + p] = acc;
      }
    return out;
  }
  Field grad = spectral_gradient(V2);
  auto gv = grad.values();
  Field total(g_);
  for (int a = 0; a < d; ++a) {
    Field flux(g_);
    auto fv = flux.mutable_values();
    for (std::size_t p = 0; p < P; ++p)
      for (int r = 0; r < m; ++r) {
        double acc = 0.0;
        for (int b = 0; b < d; ++b)
          for (int c = 0; c < m; ++c) acc += Z_[(((p * d + a) * d + b) * m + r) * m + c] * gv[(c * d + b) * P + p];
        fv[r * P + p] = acc;
      }
    total += spectral_derivative(dealias(flux), a);
  }
  if (has_theta) total += theta;
  auto tv = total.values();
  for (std::size_t p = 0; p < P; ++p)
    for (int r = 0; r < m; ++r) {
      double acc = 0.0;
      for (int c = 0; c < m; ++c) acc += Sinv_[p * m * m + r * m + c] * tv[c * P + p];
      o[r * P + p] = acc;
    }
  out = dealias(out);
  out -= prop_->generator(V2);
  return out;
}

Field step_linear_parabolic_variable(const Field& V2, const ParabolicOperator& op, const Field& theta_a,
                                     const Field& theta_b, const FrozenCoeffStep& step) {
  if (!(step.dt > 0.0)) throw InvalidArgument("parabolic step: dt must be positive");
  const double h = step.dt;
  const auto& prop = op.propagator();
  Field N0 = op.explicit_part(V2, theta_a);
  Field y = V2;
  y.axpy(h, N0);
  Field a = prop.apply(y, h);
  Field N1 = op.explicit_part(a, theta_b);
  y = V2;
  y.axpy(0.5 * h, N0);
  Field out = prop.apply(y, h);
  out.axpy(0.5 * h, N1);
  return out;
}

Field step_linear_parabolic_variable(const Field& V2, const SystemSpec& spec, const Field& U, const Field& theta,
                                     const FrozenCoeffStep& step) {
  ParabolicOperator op(spec, U);
  return step_linear_parabolic_variable(V2, op, theta, theta, step);
}

namespace {

double trapz(const std::vector<double>& t, const std::vector<double>& f, std::size_t i0, std::size_t i1, std::size_t stride) {
  double acc = 0.0;
  std::size_t prev = i0;
  for (std::size_t i = i0 + stride; i <= i1; i += stride) {
    acc += 0.5 * (t[i] - t[prev]) * (f[i] + f[prev]);
    prev = i;
  }
  return acc;
}

}  // namespace

SmoothingReport verify_smoothing_estimates(const Trajectory& traj, const ConstantParabolicOp& op, double s, double T,
                                           double h) {
  if (traj.size() < 3) throw InvalidArgument("smoothing check: trajectory too short");
  if (!(T >= 0.0) || !(h > 0.0)) throw InvalidArgument("smoothing check: need T >= 0 and h > 0");
  if (!traj.uniform()) throw InvalidArgument("smoothing check: time samples must be uniform");
  const auto& t = traj.times();
  const double eps_t = 1e-9 * std::max(1.0, traj.final_time());
  if (t.front() > eps_t || traj.final_time() < T + h - eps_t)
    throw InvalidArgument("smoothing check: trajectory must cover [0, T + h]");
  ConstantParabolicOp o = op;
  o.validate();
  SmoothingReport rep;
  rep.C0 = std::sqrt(o.cond());
  rep.c = o.kappa * 0.5625 / o.s_max();

  std::size_t i0 = 0, i1 = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] <= T + eps_t) i0 = i;
    if (t[i] <= T + h + eps_t) i1 = i;
  }
  const std::size_t nseg = i1 - i0;

  const BlockNorms& bn = traj.block_norms(Flavor::nonhomogeneous);
  double n0max = 0.0;
  for (double v : bn.values[0]) n0max = std::max(n0max, v);
  for (std::size_t b = 0; b < bn.j.size(); ++b) {
    const int j = bn.j[b];
    if (j < 0) continue;
    BlockSmoothing bs;
    bs.j = j;
    const double n0 = bn.values[0][b];
    const double four_j = std::ldexp(1.0, 2 * j);
    bs.env_lo = o.kappa * 0.5625 * four_j / o.s_max();
    bs.env_hi = o.Lambda * (64.0 / 9.0) * four_j / o.s_min();
    if (n0 <= 1e-14 * n0max || n0 == 0.0) {
      bs.vacuous = true;
      bs.note = "zero block at t = 0";
      rep.blocks.push_back(bs);
      continue;
    }
    std::vector<double> series(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      series[i] = bn.values[i][b];
      bs.linf_ratio = std::max(bs.linf_ratio, series[i] / n0);
    }
    bs.linf_ok = bs.linf_ratio <= rep.C0 * (1.0 + 1e-9);

    std::vector<double> tt, ll;
    for (std::size_t i = 0; i < t.size(); ++i)
      if (series[i] > 1e-10 * n0) {
        tt.push_back(t[i]);
        ll.push_back(std::log(series[i]));
      }
    if (tt.size() < 3) {
      bs.note = "too few samples above the noise floor for a rate fit";
      bs.in_envelope = true;
    } else {
      double tm = 0.0, lm = 0.0;
      for (std::size_t i = 0; i < tt.size(); ++i) {
        tm += tt[i];
        lm += ll[i];
      }
      tm /= tt.size();
      lm /= tt.size();
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < tt.size(); ++i) {
        num += (tt[i] - tm) * (ll[i] - lm);
        den += (tt[i] - tm) * (tt[i] - tm);
      }
      bs.rate = -num / den;
      bs.in_envelope = bs.rate >= bs.env_lo * (1.0 - 1e-9) && bs.rate <= bs.env_hi * (1.0 + 1e-9);
    }

    const double w = std::pow(2.0, j * (s + 2.0));
    std::vector<double> f(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) f[i] = w * series[i];
    bs.l1_lhs = trapz(t, f, i0, i1, 1);
    double quad_err = 0.0;
    if (nseg >= 2 && nseg % 2 == 0) quad_err = std::abs(bs.l1_lhs - trapz(t, f, i0, i1, 2));
    const double cj = rep.c * four_j;
    bs.l1_bound = rep.C0 / rep.c * std::exp(-cj * T) * (1.0 - std::exp(-cj * h)) * std::pow(2.0, j * s) * n0;
    bs.l1_ok = bs.l1_lhs <= bs.l1_bound * (1.0 + 1e-9) + 10.0 * quad_err;
    rep.blocks.push_back(bs);
  }

  ParabolicPropagator prop(o, traj.grid());
  const double v0 = besov(traj.field(0), s, 1.0, Flavor::nonhomogeneous);
  std::vector<double> low(t.size(), 0.0);
  for (std::size_t i = i0; i <= i1; ++i) {
    const Field& V = traj.field(i);
    const double a = dyadic_block(V, {-1, Flavor::nonhomogeneous}).l2();
    const double b = dyadic_block(prop.generator(V), {-1, Flavor::nonhomogeneous}).l2();
    low[i] = std::sqrt(a * a + b * b);
  }
  rep.low_lhs = trapz(t, low, i0, i1, 1);
  double quad_err = 0.0;
  if (nseg >= 2 && nseg % 2 == 0) quad_err = std::abs(rep.low_lhs - trapz(t, low, i0, i1, 2));
  rep.low_rhs = rep.C0 * h * v0;
  rep.low_C0 = v0 > 0.0 ? rep.low_lhs / (h * v0) : 0.0;
  rep.low_ok = v0 == 0.0 ? rep.low_lhs == 0.0 : rep.low_lhs <= (rep.C0 + 1e-6) * h * v0 + 10.0 * quad_err;

  rep.pass = rep.low_ok;
  for (const auto& b : rep.blocks) rep.pass = rep.pass && b.linf_ok && b.in_envelope && b.l1_ok;
  return rep;
}

OdeLemmaReport verify_ode_lemma(const std::vector<double>& t, const std::vector<double>& X, const std::vector<double>& A,
                                double B, double tol) {
  const std::size_t n = t.size();
  if (n < 3 || X.size() != n || A.size() != n) throw InvalidArgument("ode lemma: need at least 3 aligned samples");
  if (B < 0.0) throw InvalidArgument("ode lemma: B must be non-negative");
  for (std::size_t i = 0; i < n; ++i) {
    if (X[i] < 0.0 || A[i] < 0.0) throw InvalidArgument("ode lemma: X and A must be non-negative");
    if (i > 0 && !(t[i] > t[i - 1])) throw InvalidArgument("ode lemma: times must increase");
  }
  OdeLemmaReport rep;
  std::vector<double> dX(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      const double h1 = t[1] - t[0], h2 = t[2] - t[1];
      dX[0] = -(2 * h1 + h2) / (h1 * (h1 + h2)) * X[0] + (h1 + h2) / (h1 * h2) * X[1] - h1 / (h2 * (h1 + h2)) * X[2];
    } else if (i == n - 1) {
      const double h1 = t[n - 2] - t[n - 3], h2 = t[n - 1] - t[n - 2];
      dX[i] = h2 / (h1 * (h1 + h2)) * X[n - 3] - (h1 + h2) / (h1 * h2) * X[n - 2] + (2 * h2 + h1) / (h2 * (h1 + h2)) * X[n - 1];
    } else {
      const double h1 = t[i] - t[i - 1], h2 = t[i + 1] - t[i];
      dX[i] = -h2 / (h1 * (h1 + h2)) * X[i - 1] + (h2 - h1) / (h1 * h2) * X[i] + h1 / (h2 * (h1 + h2)) * X[i + 1];
    }
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    scale = std::max({scale, std::abs(0.5 * dX[i]), B * X[i], A[i] * std::sqrt(X[i])});
  for (std::size_t i = 0; i < n; ++i) {
    const double defect = 0.5 * dX[i] + B * X[i] - A[i] * std::sqrt(X[i]);
    rep.hypothesis_defect = std::max(rep.hypothesis_defect, defect);
  }
  // Truncation error of the second-order stencils, h^2 |X'''| / 3 with X''' from third divided differences.
  double trunc = 0.0;
  for (std::size_t i = 0; i + 3 < n; ++i) {
    auto dd = [&](std::size_t a, std::size_t b) { return (X[b] - X[a]) / (t[b] - t[a]); };
    const double d2a = (dd(i + 1, i + 2) - dd(i, i + 1)) / (t[i + 2] - t[i]);
    const double d2b = (dd(i + 2, i + 3) - dd(i + 1, i + 2)) / (t[i + 3] - t[i + 1]);
    const double x3 = 6.0 * (d2b - d2a) / (t[i + 3] - t[i]);
    const double h = std::max({t[i + 1] - t[i], t[i + 2] - t[i + 1], t[i + 3] - t[i + 2]});
    trunc = std::max(trunc, h * h * std::abs(x3) / 3.0);
  }
  rep.hypothesis_ok = rep.hypothesis_defect <= std::max({tol, 1e-6 * scale, trunc});
  if (!rep.hypothesis_ok) {
    rep.note = "hypothesis violated; conclusion not asserted";
    rep.conclusion_ok = true;
    return rep;
  }
  rep.conclusion_checked = true;
  double intX = 0.0, intA = 0.0, qerr = 0.0, cscale = std::sqrt(X[0]);
  rep.conclusion_defect = 0.0;
  auto second = [&](const std::function<double(std::size_t)>& f, std::size_t i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    return std::abs(f(c + 1) - 2.0 * f(c) + f(c - 1));
  };
  auto sx = [&](std::size_t k) { return std::sqrt(X[k]); };
  auto sa = [&](std::size_t k) { return A[k]; };
  for (std::size_t i = 1; i < n; ++i) {
    const double dt = t[i] - t[i - 1];
    intX += 0.5 * dt * (std::sqrt(X[i]) + std::sqrt(X[i - 1]));
    intA += 0.5 * dt * (A[i] + A[i - 1]);
    // trapezoid error per interval ~ dt * (second difference) / 12
    qerr += dt / 12.0 * (B * second(sx, i) + second(sa, i));
    const double lhs = std::sqrt(X[i]) + B * intX;
    const double rhs = std::sqrt(X[0]) + intA;
    cscale = std::max(cscale, rhs);
    rep.conclusion_defect = std::max(rep.conclusion_defect, lhs - rhs - qerr);
  }
  rep.conclusion_ok = rep.conclusion_defect <= tol * std::max(1.0, cscale);
  if (!rep.conclusion_ok) rep.note = "conclusion violated beyond tolerance";
  return rep;
}

}  // namespace hypar

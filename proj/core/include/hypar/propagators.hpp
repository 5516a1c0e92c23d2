#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hypar/field.hpp"
#include "hypar/systems.hpp"
#include "hypar/trajectory.hpp"

namespace hypar {

// S_bar dV/dt - Z(D) V = 0 with Z(xi) = |xi|^{gamma-2} sum_ab xi_a xi_b Z_bar^ab.
struct ConstantParabolicOp {
  int d = 1;
  int n2 = 1;
  Mat S_bar;
  std::vector<Mat> Z_bar;  // index a*d + b
  double gamma = 2.0;
  // Symbol bounds kappa|xi|^gamma <= Z(xi) <= Lambda|xi|^gamma, filled by validate().
  double kappa = 0.0;
  double Lambda = 0.0;

  static ConstantParabolicOp from_system(const SystemSpec& spec);
  static ConstantParabolicOp heat(int d, int n2 = 1, double diffusivity = 1.0);

  Mat symbol(const double* xi) const;
  void validate();
  double cond() const;  // condition number of S_bar
  double s_min() const;
  double s_max() const;
};

// Per-mode data of exp(-t S^-1 Z(xi)) on one grid.
class ParabolicPropagator {
 public:
  ParabolicPropagator(const ConstantParabolicOp& op, const GridSpec& g);

  const ConstantParabolicOp& op() const { return op_; }
  const GridSpec& grid() const { return g_; }

  // Row-major n2 x n2 block per mode; cached for the most recent times.
  std::shared_ptr<const std::vector<double>> exp_table(double t) const;
  Field apply(const Field& V, double t) const;
  // -S^-1 Z(D) V, the exact time derivative.
  Field generator(const Field& V) const;

 private:
  ConstantParabolicOp op_;
  GridSpec g_;
  int n2_;
  // Symmetrizable modes: E = P diag(exp(-t lam)) Pinv.
  std::vector<double> P_, Pinv_, lam_;
  std::vector<std::size_t> pade_modes_;
  std::vector<double> gen_;  // S^-1 Z(xi) per mode
  mutable std::mutex mu_;
  mutable std::vector<std::pair<double, std::shared_ptr<const std::vector<double>>>> tables_;
};

void apply_mode_matrices(const GridSpec& g, int n2, const std::vector<double>& table, std::vector<cplx>& spec);

// Exact solution sampled at samples+1 uniform times on [0, T].
Trajectory solve_constant_parabolic(const Field& V0, const ConstantParabolicOp& op, double T, std::size_t samples);

enum class Scheme { rk4, integrating_factor };

struct FrozenCoeffStep {
  Scheme scheme = Scheme::rk4;
  double dt = 1e-3;
  double cfl_safety = 0.5;
};

// S0_11(U) dV/dt + sum_a S^a_11(U) d_a V = Theta with U frozen.
class HyperbolicOperator {
 public:
  HyperbolicOperator(const SystemSpec& spec, const Field& U);

  const GridSpec& grid() const { return g_; }
  double max_speed() const { return speed_; }
  double admissible_dt(double safety) const;
  // -sum_a A^a d_a V + S0_11^-1 Theta, dealiased. An empty theta counts as zero.
  Field rhs(const Field& V1, const Field& theta) const;

 private:
  GridSpec g_;
  int n1_ = 0, d_ = 1;
  std::vector<double> A_;     // per point, per alpha, n1 x n1 row-major
  std::vector<double> Sinv_;  // per point, n1 x n1
  double speed_ = 0.0;
};

// One RK4 step. theta_a, theta_m, theta_b are the sources at the start, middle and end of the step.
Field step_linear_hyperbolic(const Field& V1, const HyperbolicOperator& op, const Field& theta_a,
                             const Field& theta_m, const Field& theta_b, const FrozenCoeffStep& step);
Field step_linear_hyperbolic(const Field& V1, const SystemSpec& spec, const Field& U, const Field& theta,
                             const FrozenCoeffStep& step);

// S0_22(U) dV/dt - sum_ab d_a(Z^ab(U) d_b V) = Theta with U frozen, constant part at U_bar exact.
class ParabolicOperator {
 public:
  ParabolicOperator(const SystemSpec& spec, const Field& U, std::shared_ptr<const ParabolicPropagator> prop);
  ParabolicOperator(const SystemSpec& spec, const Field& U);

  const ParabolicPropagator& propagator() const { return *prop_; }
  bool constant() const { return constant_; }
  double min_ellipticity() const { return c1_; }
  // Explicit part: S22(U)^-1 [div(Z(U) grad V) + Theta] + S_bar^-1 Z_bar(D) V.
  Field explicit_part(const Field& V2, const Field& theta) const;

 private:
  GridSpec g_;
  int n1_ = 0, n2_ = 1, d_ = 1;
  std::shared_ptr<const ParabolicPropagator> prop_;
  std::vector<double> Sinv_;  // per point n2 x n2
  std::vector<double> Z_;     // per point, per (a,b), n2 x n2
  bool constant_ = false;
  double c1_ = 0.0;
};

// Integrating-factor RK2 step; theta_a and theta_b are the sources at both ends of the step.
Field step_linear_parabolic_variable(const Field& V2, const ParabolicOperator& op, const Field& theta_a,
                                     const Field& theta_b, const FrozenCoeffStep& step);
Field step_linear_parabolic_variable(const Field& V2, const SystemSpec& spec, const Field& U, const Field& theta,
                                     const FrozenCoeffStep& step);

struct BlockSmoothing {
  int j = 0;
  bool vacuous = false;
  std::string note;
  double rate = 0.0;  // fitted decay rate of ||Delta_j V(t)||
  double env_lo = 0.0, env_hi = 0.0;
  bool in_envelope = true;
  double linf_ratio = 0.0;  // sup_t ||Delta_j V(t)|| / ||Delta_j V0||
  bool linf_ok = true;
  double l1_lhs = 0.0, l1_bound = 0.0;
  bool l1_ok = true;
};

struct SmoothingReport {
  double C0 = 1.0;  // cond(S_bar)^{1/2}
  double c = 0.0;   // kappa (3/4)^2 / lambda_max(S_bar)
  std::vector<BlockSmoothing> blocks;
  double low_lhs = 0.0, low_rhs = 0.0;
  double low_C0 = 0.0;  // measured constant of the low-block bound
  bool low_ok = true;
  bool pass = true;
};

// The trajectory must come from the exact propagator and cover [0, T + h].
SmoothingReport verify_smoothing_estimates(const Trajectory& traj, const ConstantParabolicOp& op, double s, double T,
                                           double h);

struct OdeLemmaReport {
  bool hypothesis_ok = true;
  double hypothesis_defect = 0.0;
  bool conclusion_checked = false;
  bool conclusion_ok = true;
  double conclusion_defect = 0.0;
  std::string note;
  bool pass() const { return hypothesis_ok && conclusion_ok; }
};

// Checks 1/2 X' + B X <= A X^{1/2} at the samples, then
// X^{1/2}(t) + B int_0^t X^{1/2} <= X^{1/2}(0) + int_0^t A.
OdeLemmaReport verify_ode_lemma(const std::vector<double>& t, const std::vector<double>& X, const std::vector<double>& A,
                                double B, double tol = 1e-8);

}  // namespace hypar

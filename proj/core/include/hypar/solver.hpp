#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hypar/field.hpp"
#include "hypar/propagators.hpp"
#include "hypar/systems.hpp"
#include "hypar/trajectory.hpp"

namespace hypar {

struct IterationConfig {
  double s = 1.0;
  double R = 0.0;    // 0: 2 C0 max(||V0^1||_{B^{s+1}}, ||V0^2||_{B^s}), at least 1
  double eta = 0.5;
  double T = 0.0;    // 0: compute_T0 (subcritical) or the critical T rule
  int m = -1;        // critical low-frequency index, -1: smallest admissible
  double dt = 1e-3;  // upper bound; the step is shrunk so that T is a multiple
  int p_max = 20;
  double contraction_tol = 1e-12;
  double C = 1.0;    // X_p weight eps = 1/(4C)
  double c_T0 = 0.0;  // 0: rigorous kappa (3/4)^2 / lambda_max(S_bar)
  double C_T0 = 0.0;  // 0: fitted on the exact propagator
  double cfl_safety = 0.5;
  std::size_t snapshot_stride = 1;
  int smoothing_levels = 0;  // critical path: extra runs on smoothed data before the full one

  void validate() const;
};

struct HypothesisStatus {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = true;
  bool lower_bound = false;  // value must stay above threshold
  double margin() const { return lower_bound ? value - threshold : threshold - value; }
};

struct IterationRecord {
  int p = 0;
  double X = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // X_p / X_{p-1}
  double residual = 0.0;
  std::vector<HypothesisStatus> hypotheses;
  bool hypotheses_pass() const;
};

struct IterationDiagnostics {
  std::vector<IterationRecord> iterations;
  std::map<std::string, double> constants;
  std::string status;  // converged | cap | hypothesis-failure
  std::vector<std::string> notes;

  double max_ratio(int from_p) const;
  bool residual_monotone_to_floor(double floor_factor = 2.0) const;
  std::string to_json() const;
};

struct SplitState {
  Trajectory V2_L;
  Trajectory V_S;
};

// V2_L from the constant-coefficient propagator with data V2_0, V_S = V2 - V2_L.
SplitState split_parabolic(const Trajectory& V2, const Field& V2_0, const ParabolicPropagator& prop);

double compute_T0(const Field& V0_2, double s, double eta, double c, double C);

struct T0Constants {
  double c = 0.0;
  double C = 1.0;
};
// c from the symbol bounds; C = max(1, max_h LHS(h)/bound(h)) measured on the exact solution.
T0Constants fit_T0_constants(const Field& V0_2, const ConstantParabolicOp& op, double s, double horizon = 1.0,
                             std::size_t samples = 1000);

// Sources of the frozen linear system evaluated on V:
// Theta1 = f1 - sum S^a_12 d_a V2, Theta2 = f2 - sum (S^a_21 d_a V1 + S^a_22 d_a V2).
struct FrozenSources {
  Field theta1, theta2;
};
FrozenSources frozen_sources(const SystemSpec& spec, const Field& V);

// dV/dt of the full nonlinear system at V, dealiased.
Field nonlinear_rhs(const SystemSpec& spec, const Field& V);
// S0(U) dV/dt + sum S^a d_a V - sum d_a(Y^ab d_b V) - f, integrated as L1_T(L2).
double nonlinear_residual(const SystemSpec& spec, const Trajectory& V);

struct IterationResult {
  Trajectory V;       // last iterate
  Trajectory U_prev;  // coefficient state V_{p-1} the last iterate was frozen at
  Trajectory theta;   // sources (Theta1, Theta2) of the last linear solve
  IterationDiagnostics diag;
  double T = 0.0;
  double R = 0.0;
};

IterationResult iterate_subcritical(const SystemSpec& spec, const Field& V0, const IterationConfig& cfg);

struct PhaseRegion {
  double margin = 0.0;  // O = {phase_distance >= margin}
};

std::vector<HypothesisStatus> check_hypotheses_subcritical(const SystemSpec& spec, const Trajectory& V,
                                                           const SplitState& split, const IterationConfig& cfg,
                                                           double R, const PhaseRegion& phase);

struct ContinuationSeries {
  std::vector<double> t;
  std::vector<double> integral;      // int (|grad V|^2 + |DIV S11| + |dt S22|)
  std::vector<double> sup_grad_v1;   // sup |grad V1|
  std::vector<double> reduced;       // int (|grad V1|^2 + |grad V2|)
  bool reduced_applicable = false;
};
ContinuationSeries continuation_monitor(const Trajectory& V, const SystemSpec& spec);

struct DependenceEntry {
  double eps = 0.0;
  double sup_weak = 0.0;
  double ratio = 0.0;
  bool converged = false;
  std::string note;
};
struct DependenceReport {
  std::vector<DependenceEntry> entries;
  double variation = 0.0;  // max ratio / min ratio over converged entries
  bool pass = false;
};
// Weak norm sup_t (||dV1||_{B^s} + ||dV2||_{B^{s-1}}).
DependenceReport continuous_dependence_experiment(const SystemSpec& spec, const Field& V0, const Field& perturbation,
                                                  const std::vector<double>& eps, const IterationConfig& cfg);

struct CriticalResult {
  Trajectory V;
  Trajectory theta;
  IterationDiagnostics diag;
  double T = 0.0;
  int m = 0;
  double M1 = 0.0;
  double d1 = 0.0;
  double dt = 0.0;
};

// Smallest m with sum_{j>=m} 2^{jd/2} ||Delta_j V0^1|| <= sqrt(eta)/2.
int critical_m(const Field& V0_1, double eta);
// sup{h : C0 sum_j (1 - e^{-c 4^j h}) 2^{j(d/2-1)} ||Delta_j V0^2|| <= eta^2}, capped at cap.
double critical_T(const Field& V0_2, double eta, double c, double C0, double cap = 1.0);

CriticalResult solve_critical(const SystemSpec& spec, const Field& V0, const IterationConfig& cfg);

}  // namespace hypar

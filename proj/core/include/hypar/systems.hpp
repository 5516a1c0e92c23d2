#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "hypar/field.hpp"

namespace hypar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class AssumptionProfile { B, C };

// System in normal form
//   S0(U) dV/dt + sum_a Sa(U) d_a V - sum_ab d_a(Y^ab(U) d_b V) = f(U, grad U),
// with Y^ab = diag(0, Z^ab) and U = U_bar + V. Matrices are written column-major
// into caller-provided buffers so that per-point assembly does not allocate.
struct SystemSpec {
  std::string name;
  int n1 = 0;
  int n2 = 0;
  int d = 1;
  Vec U_bar;
  AssumptionProfile profile = AssumptionProfile::B;
  std::map<std::string, double> params;

  std::function<bool(const double* U)> in_phase;
  // Positive inside the phase space; used for compactness margins.
  std::function<double(const double* U)> phase_distance;
  // Distance of the first n1 components to the boundary of the projected phase space.
  std::function<double(const double* U1)> phase_distance_1;
  std::function<void(const double* U, double* S0)> S0;
  std::function<void(const double* U, int alpha, double* Sa)> Salpha;
  std::function<void(const double* U, int alpha, int beta, double* Z)> Z;
  // grad holds dU_c/dx_a at index c*d + a; f has n entries.
  std::function<void(const double* U, const double* grad, double* f)> source;
  bool source_uses_gradient = false;

  int n() const { return n1 + n2; }

  Mat S0_at(const Vec& U) const;
  Mat Salpha_at(const Vec& U, int alpha) const;
  Mat Z_at(const Vec& U, int alpha, int beta) const;
  Mat Z_symbol(const Vec& U, const Vec& xi) const;  // sum_ab xi_a xi_b Z^ab
  Vec source_at(const Vec& U, const Mat& grad) const;  // grad is n x d
  bool admits(const Vec& U) const { return in_phase(U.data()); }
};

struct GasLaw {
  double R = 1.0;
  double cv = 1.0;
};

struct Transport {
  double mu = 1.0;
  double lambda = 0.0;
  double kappa = 1.0;  // heat conductivity k
};

SystemSpec assemble_nsf(int d, const GasLaw& gas, const Transport& tr, double rho_bar = 1.0,
                        double theta_bar = 1.0);

struct BarotropicLaw {
  std::function<double(double rho)> p;
  std::function<double(double rho)> dp;
  // Viscosities may depend on the whole state; Assumption C needs rho only.
  std::function<double(double rho, const double* u)> mu;
  std::function<double(double rho, const double* u)> lambda;
  double rho_floor = 0.0;
  std::map<std::string, double> params;
};

BarotropicLaw gamma_law(double A, double gamma, double mu, double lambda);
SystemSpec assemble_barotropic(int d, const BarotropicLaw& law, double rho_bar = 1.0);

// Constant-coefficient heat system with n2 components and no hyperbolic part.
SystemSpec assemble_heat(int d, int n2, double diffusivity = 1.0);

struct EllipticityReport {
  double c1_hat = 0.0;
  double exact_min = 0.0;  // min eigenvalue of the symmetrized symbol on sampled (U, xi)
  Vec worst_xi, worst_lambda, worst_U;
  std::size_t sample_count = 0;
  bool ok = false;
};

EllipticityReport check_strong_ellipticity(const SystemSpec& spec, const std::vector<Vec>& U_samples,
                                           const std::vector<Vec>& xi_samples,
                                           const std::vector<Vec>& lambda_samples);
// Random unit xi and lambda, plus coordinate pairs.
EllipticityReport check_strong_ellipticity(const SystemSpec& spec, const std::vector<Vec>& U_samples,
                                           std::size_t samples, unsigned long long seed);

struct CheckItem {
  std::string name;
  bool pass = true;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string note;
};

struct AssumptionReport {
  std::vector<CheckItem> items;
  bool pass() const;
  const CheckItem* find(const std::string& name) const;
};

AssumptionReport check_assumption_B(const SystemSpec& spec, const std::vector<Vec>& U_samples);
AssumptionReport check_assumption_C(const SystemSpec& spec, const std::vector<Vec>& U_samples, double h = 1e-5);

struct EntropyReport {
  double omega_hat = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;
  bool pass = false;
  bool vacuous = false;
  Vec witness_u, witness_xi, witness_X;
  std::string note;
};

struct EntropySample {
  Vec u, xi, X;
};

EntropyReport check_entropy_dissipativity(const std::function<Mat(const Vec& u)>& hessian,
                                          const std::function<Mat(const Vec& u, int a, int b)>& Bab,
                                          int d, const std::vector<EntropySample>& samples,
                                          double floor = 1e-12);

// U = U_bar + V pointwise.
Field full_state(const SystemSpec& spec, const Field& V);
// Throws PhaseError carrying the state closest to the boundary when any point leaves the phase space.
void require_phase(const SystemSpec& spec, const Field& U, double t = 0.0);

// Uniform samples of states inside a box around U_bar, rejected outside the phase space.
std::vector<Vec> sample_states(const SystemSpec& spec, const Vec& lo, const Vec& hi, std::size_t count,
                               unsigned long long seed);

}  // namespace hypar

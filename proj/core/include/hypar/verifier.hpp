#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "hypar/corpus.hpp"
#include "hypar/filter.hpp"
#include "hypar/propagators.hpp"
#include "hypar/systems.hpp"
#include "hypar/trajectory.hpp"

namespace hypar {

struct InequalityInstance {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;  // right-hand side without the constant
  double scale = 1.0;  // magnitude used to decide that rhs vanishes
};

struct InequalityReport {
  std::string name;
  std::vector<InequalityInstance> instances;
  double C = 0.0;  // max lhs / rhs over instances with rhs > 0
  std::vector<std::string> violations;  // rhs = 0 with lhs > 0
  bool stable = true;
  double C_refined = std::numeric_limits<double>::quiet_NaN();
  double variation = 0.0;  // |C - C_refined| / max(C, C_refined)
  std::map<std::string, double> extras;

  bool finite() const;
  bool pass() const { return violations.empty() && finite() && stable; }
  std::string to_json() const;
};

// Fits C from the instances and records violations. Absolute slack tol guards lhs against round-off.
void fit_constant(InequalityReport& r, double tol = 1e-12);
// Marks r unstable when its constant differs from the refined one by more than rel.
void compare_resolutions(InequalityReport& r, const InequalityReport& refined, double rel = 0.25, double abs = 0.0);

struct PairOptions {
  std::size_t max_pairs = 100;
  Flavor flavor = Flavor::nonhomogeneous;
};

// Index pairs used by the bilinear checks; deterministic in the corpus seed.
std::vector<std::pair<std::size_t, std::size_t>> corpus_pairs(const Corpus& c, std::size_t max_pairs);

// ||ab||_{B^s} against ||a||_{B^{d/2}} ||b||_{B^s}, and for s > 0 against
// ||a||_inf ||b||_{B^s} + ||b||_inf ||a||_{B^s}.
std::vector<InequalityReport> verify_product_law(const Corpus& c, double s, const PairOptions& opt = {});

// sum_j 2^{j sigma} ||[a, Delta_j] b||. The first report requires sigma > 0 and uses
// ||grad a||_inf ||b||_{B^{sigma-1}} + ||b||_inf ||grad a||_{B^{sigma-1}}; the second
// requires -d/2 < sigma <= d/2 + 1 and uses (||grad a||_{B^{d/2}_{2,inf}} + ||grad a||_inf) ||b||_{B^{sigma-1}}.
// extras["sum_cj_max"] is the largest sum of the reconstructed c_j over pairs.
std::vector<InequalityReport> verify_commutator(const Corpus& c, double sigma, const PairOptions& opt = {});

// Scalar map with f(0) = 0 and the bound sup_{|x| <= M} |f'(x)|.
struct ScalarMap {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double M)> dsup;
};
ScalarMap map_square();
ScalarMap map_sin();
ScalarMap map_expm1();
ScalarMap map_identity();

// ||f(u)||_{B^s} against dsup(||u||_inf) ||u||_{B^s}, and the difference form on pairs
// against dsup(M) (1 + ||(u,v)||_{B^{max(s,d/2)}}) ||u - v||_{B^s}.
std::vector<InequalityReport> verify_composition(const Corpus& c, const ScalarMap& f, double s,
                                                 const PairOptions& opt = {});

// Per f: deficit = c ||grad f||^2 - eps ||grad^2 f|| ||f|| - LHS against ||f||^2,
// LHS = -sum_ab int Z^ab(U) d_a d_b f . f. The fitted C is max(0, max deficit / ||f||^2).
InequalityReport verify_garding(const SystemSpec& spec, const Field& U, const std::vector<Field>& f, double eps,
                                double c);
// -sum_ab int Z^ab(U) d_a d_b f . f
double garding_lhs(const SystemSpec& spec, const Field& U, const Field& f);

// Samples of a linear run: Vt solves the frozen system with coefficients U = U_bar + V,
// theta holds the sources (Theta1, Theta2).
struct LinearRunRecord {
  Trajectory Vt;
  Trajectory V;
  Trajectory theta;
};

// Instances per sample t: lhs = sup_{tau <= t} ||Vt1||_{B^sigma} / C0 - ||Vt1(0)|| - int ||Theta1||,
// rhs = int_0^t Phi1 ||Vt1||_{B^sigma}, Phi1 = ||DIV S11(U)||_inf + ||V||_{B^{sigma**+1}}.
InequalityReport verify_apriori_hyperbolic(const SystemSpec& spec, const LinearRunRecord& run, double sigma);
// lhs = (||Vt2||_{CL Linf_t(B^s)} + c ||Vt2||_{L1_t(B^{s+2})}) / C0 - ||Vt2(0)|| - int ||Theta2||,
// rhs = int_0^t Phi2 ||Vt2||_{B^s}, Phi2 = 1 + ||dt S22||_inf + (1 + ||V||_{B^{s*}})^2 ||V||^2_{B^{s*+1}}.
InequalityReport verify_apriori_parabolic(const SystemSpec& spec, const LinearRunRecord& run, double s);

}  // namespace hypar

#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "hypar/field.hpp"
#include "hypar/filter.hpp"
#include "hypar/trajectory.hpp"

namespace hypar {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct BesovIndex {
  double s = 0.0;
  double p = 2.0;  // 2 or infinity
  double r = 1.0;  // 1, 2 or infinity
  Flavor flavor = Flavor::nonhomogeneous;
};

struct NormRecord {
  BesovIndex idx;
  double rho = 0.0;  // time exponent, 0 for a static norm
  std::vector<int> j;
  std::vector<double> per_block;
  double total = 0.0;
  double tail = 0.0;
  std::size_t samples = 1;
  GridSpec grid;
  std::uint64_t profile = 0;
  std::string warning;

  std::string to_csv() const;
  std::string to_json() const;
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

double lr_norm(const std::vector<double>& v, double r);

NormRecord besov_norm(const Field& u, const BesovIndex& idx);
double besov(const Field& u, double s, double r = 1.0, Flavor f = Flavor::nonhomogeneous);

// Time norm per block, then l^r over blocks.
NormRecord chemin_lerner_norm(const Trajectory& traj, const BesovIndex& idx, double rho);
// Besov norm per sample, then the time norm.
double lebesgue_besov_norm(const Trajectory& traj, const BesovIndex& idx, double rho);
std::vector<double> besov_series(const Trajectory& traj, const BesovIndex& idx);

struct InterpolationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool ok = true;
};
// ||V||_{L2(B^{s+1})} against ||V||_{Linf(B^s)}^{1/2} ||V||_{L1(B^{s+2})}^{1/2}.
InterpolationReport interpolation_check(const Trajectory& traj, double s,
                                        Flavor f = Flavor::nonhomogeneous);

struct LogInterpolationReport {
  double lhs = 0.0;  // L1(Bdot^{d/2}_{2,1})
  double x = 0.0;    // CL L1(Bdot^{d/2}_{2,inf})
  double y = 0.0;    // CL L1(Bdot^{d/2-1}_{2,inf}) + CL L1(Bdot^{d/2+1}_{2,inf})
  double log_factor = 0.0;
  double ratio = 0.0;  // lhs / (x log(e + y/x))
};
LogInterpolationReport log_interpolation_check(const Trajectory& traj);

}  // namespace hypar

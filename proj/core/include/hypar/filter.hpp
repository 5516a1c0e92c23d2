#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hypar/field.hpp"

namespace hypar {

enum class Flavor { homogeneous, nonhomogeneous };

struct BlockIndex {
  int j = 0;
  Flavor flavor = Flavor::nonhomogeneous;
};

// Radial profile: 1 on [0, 3/4], 0 on [4/3, inf), C-infinity in between.
double chi_profile(double r);
double phi_profile(double r);  // chi(r/2) - chi(r)
std::uint64_t profile_hash();

class FilterBank {
 public:
  explicit FilterBank(const GridSpec& g);

  const GridSpec& grid() const { return g_; }
  int j_min() const { return j_min_; }
  int j_max() const { return j_max_; }  // top fully resolved annulus
  int j_top() const { return j_top_; }  // last annulus touching the grid

  const std::vector<double>& chi_hat() const { return chi_; }
  const std::vector<double>& phi_hat(int j) const;

  // Multiplier of a block, empty when the block vanishes identically.
  std::span<const double> block(BlockIndex b) const;
  std::vector<double> cutoff(int m, Flavor f) const;
  bool cutoff_is_identity(int m) const;

  std::vector<int> blocks(Flavor f) const;

 private:
  GridSpec g_;
  int j_min_ = 0, j_max_ = 0, j_top_ = 0;
  std::vector<double> chi_;
  std::vector<std::vector<double>> phi_;  // j_min .. j_top
};

FilterBank build_filter_bank(const GridSpec& g);
std::shared_ptr<const FilterBank> filter_bank(const GridSpec& g);

Field dyadic_block(const Field& u, BlockIndex b);
Field low_freq_cutoff(const Field& u, int m, Flavor f);

}  // namespace hypar

#include "hypar/filter.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "hypar/errors.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

constexpr double kInner = 0.75;
constexpr double kOuter = 4.0 / 3.0;

double smooth_step(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

double chi_profile(double r) {
  if (r <= kInner) return 1.0;
  if (r >= kOuter) return 0.0;
  const double w = kOuter - kInner;
  const double a = smooth_step((kOuter - r) / w);
  const double b = smooth_step((r - kInner) / w);
  return a / (a + b);
}

double phi_profile(double r) { return chi_profile(0.5 * r) - chi_profile(r); }

std::uint64_t profile_hash() {
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 0; i < 1024; ++i) {
    const double v = chi_profile(2.0 * i / 1023.0);
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 1099511628211ull;
    }
  }
  return h;
}

FilterBank::FilterBank(const GridSpec& g) : g_(g.with_components(1)) {
  g_.validate();
  auto ft = freq_table(g_);
  j_max_ = static_cast<int>(std::floor(std::log2(g_.nyquist() * 3.0 / 8.0)));
  if (j_max_ < 1) throw InvalidArgument("filter bank: grid too coarse, j_max = " + std::to_string(j_max_));
  j_min_ = -static_cast<int>(std::floor(std::log2(g_.L))) - 2;
  j_top_ = j_max_;
  while (ft->max_abs_xi > kInner * std::ldexp(1.0, j_top_ + 1)) ++j_top_;

  const std::size_t nm = g_.modes();
  chi_.resize(nm);
  for (std::size_t m = 0; m < nm; ++m) chi_[m] = chi_profile(ft->abs_xi[m]);
  phi_.resize(static_cast<std::size_t>(j_top_ - j_min_ + 1));
  for (int j = j_min_; j <= j_top_; ++j) {
    auto& p = phi_[static_cast<std::size_t>(j - j_min_)];
    p.resize(nm);
    const double s = std::ldexp(1.0, -j);
    for (std::size_t m = 0; m < nm; ++m) p[m] = phi_profile(s * ft->abs_xi[m]);
  }
}

const std::vector<double>& FilterBank::phi_hat(int j) const {
  if (j < j_min_ || j > j_top_) throw InvalidArgument("filter bank: block index out of stored range");
  return phi_[static_cast<std::size_t>(j - j_min_)];
}

std::span<const double> FilterBank::block(BlockIndex b) const {
  if (b.flavor == Flavor::nonhomogeneous) {
    if (b.j == -1) return chi_;
    if (b.j < -1 || b.j > j_top_) return {};
    return phi_hat(b.j);
  }
  if (b.j < j_min_ || b.j > j_top_) return {};
  return phi_hat(b.j);
}

bool FilterBank::cutoff_is_identity(int m) const {
  return freq_table(g_)->max_abs_xi <= kInner * std::ldexp(1.0, m);
}

std::vector<double> FilterBank::cutoff(int m, Flavor f) const {
  const std::size_t nm = g_.modes();
  if (f == Flavor::nonhomogeneous && m <= -1) return std::vector<double>(nm, 0.0);
  if (cutoff_is_identity(m)) return std::vector<double>(nm, 1.0);
  auto ft = freq_table(g_);
  std::vector<double> out(nm);
  const double s = std::ldexp(1.0, -m);
  for (std::size_t i = 0; i < nm; ++i) out[i] = chi_profile(s * ft->abs_xi[i]);
  return out;
}

std::vector<int> FilterBank::blocks(Flavor f) const {
  std::vector<int> out;
  for (int j = (f == Flavor::nonhomogeneous ? -1 : j_min_); j <= j_top_; ++j) out.push_back(j);
  return out;
}

FilterBank build_filter_bank(const GridSpec& g) { return FilterBank(g); }

std::shared_ptr<const FilterBank> filter_bank(const GridSpec& g) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double>, std::shared_ptr<const FilterBank>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(g.d, g.N, g.L);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto fb = std::make_shared<const FilterBank>(g);
  cache.emplace(key, fb);
  return fb;
}

Field dyadic_block(const Field& u, BlockIndex b) {
  auto fb = filter_bank(u.grid());
  auto mult = fb->block(b);
  if (mult.empty()) return Field(u.grid());
  return apply_multiplier(u, std::vector<double>(mult.begin(), mult.end()));
}

Field low_freq_cutoff(const Field& u, int m, Flavor f) {
  auto fb = filter_bank(u.grid());
  if (!(f == Flavor::nonhomogeneous && m <= -1) && fb->cutoff_is_identity(m)) return u;
  return apply_multiplier(u, fb->cutoff(m, f));
}

}  // namespace hypar

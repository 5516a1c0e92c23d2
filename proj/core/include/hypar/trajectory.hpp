#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "hypar/field.hpp"
#include "hypar/filter.hpp"

namespace hypar {

// Per-sample L2 norms of the dyadic blocks, rows indexed by time.
struct BlockNorms {
  std::vector<int> j;
  std::vector<std::vector<double>> values;
  std::vector<double> tail;  // zero-mode mass left out of homogeneous blocks
};

std::vector<double> block_l2_norms(const Field& u, Flavor f, double* tail = nullptr);

class Trajectory {
 public:
  Trajectory();

  void push(double t, Field f);
  void reserve(std::size_t n);

  std::size_t size() const { return fields_.size(); }
  bool empty() const { return fields_.empty(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Field>& fields() const { return fields_; }
  const Field& field(std::size_t i) const { return fields_.at(i); }
  const Field& back() const { return fields_.back(); }
  double time(std::size_t i) const { return times_.at(i); }
  double final_time() const { return times_.empty() ? 0.0 : times_.back(); }
  const GridSpec& grid() const;
  bool uniform(double rel_tol = 1e-6) const;

  std::string scheme;
  double dt = 0.0;

  const BlockNorms& block_norms(Flavor f) const;

  Trajectory components(int first, int count) const;
  Trajectory subsample(std::size_t stride) const;
  // Second-order finite differences in time.
  Trajectory time_derivative() const;
  friend Trajectory operator-(const Trajectory& a, const Trajectory& b);

  // Directory of binary snapshots plus manifest.json.
  void save(const std::string& dir) const;
  static Trajectory load(const std::string& dir);

 private:
  struct Cache {
    std::once_flag once;
    BlockNorms norms;
  };
  void reset_cache();

  std::vector<double> times_;
  std::vector<Field> fields_;
  mutable std::shared_ptr<Cache> cache_[2];
};

// Trapezoid rule on the sample times; rho = infinity gives the max.
double time_norm(const std::vector<double>& t, const std::vector<double>& f, double rho);

}  // namespace hypar

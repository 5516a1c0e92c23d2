#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypar/field.hpp"
#include "hypar/solver.hpp"
#include "hypar/systems.hpp"

namespace hypar::cli {

inline constexpr const char* kSchema = "hypar.run/1";

struct GridConfig {
  int d = 1;
  int N = 64;
  double L = 2.0 * std::numbers::pi;
  bool operator==(const GridConfig&) const = default;
};

struct SystemConfig {
  std::string name = "barotropic";  // barotropic | nsf | heat
  std::map<std::string, double> params;
  bool operator==(const SystemConfig&) const = default;
};

struct DataConfig {
  std::string kind = "modes";  // zero | modes | bump | file
  double amplitude = 0.01;
  int kmax = 2;
  double width = 0.8;
  std::string path;
  bool operator==(const DataConfig&) const = default;
};

struct NormConfig {
  double s = 1.0;
  double r = 1.0;
  std::string flavor = "nonhomogeneous";
  bool operator==(const NormConfig&) const = default;
};

struct VerifyConfig {
  std::vector<std::string> inequalities{"product", "commutator", "composition"};
  std::vector<std::string> maps{"square", "sin", "expm1"};
  double s = 0.5;
  double sigma = 1.0;
  double eps = 0.1;
  int per_family = 20;
  double amplitude = 1.0;
  int max_pairs = 100;
  bool refine = true;
  bool operator==(const VerifyConfig&) const = default;
};

struct SweepConfig {
  std::string parameter = "eta";
  std::vector<double> values;
  std::string member = "simulate";  // simulate | solve-critical
  bool operator==(const SweepConfig&) const = default;
};

struct MonitorConfig {
  bool continuation = true;
  bool apriori = false;
  bool operator==(const MonitorConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "hypar-out";
  std::vector<std::string> formats{"csv", "json"};
  bool snapshots = false;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  std::string schema = kSchema;
  std::string command = "simulate";
  GridConfig grid;
  SystemConfig system;
  DataConfig data;
  IterationConfig iteration;
  NormConfig norm;
  VerifyConfig verify;
  SweepConfig sweep;
  MonitorConfig monitors;
  OutputConfig output;
  std::uint64_t seed = 0;

  bool operator==(const RunConfig& o) const;
};

// Throws ConfigError carrying the JSON path of the first offending entry.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& c);

SystemSpec build_system(const RunConfig& c);
GridSpec build_grid(const RunConfig& c, int ncomp);
// Initial data V0 = U0 - U_bar; seeded for the random kinds.
Field build_data(const RunConfig& c, const SystemSpec& spec);

}  // namespace hypar::cli

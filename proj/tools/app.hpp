#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace hypar::cli {

enum ExitCode : int { kOk = 0, kViolation = 1, kConfigError = 2, kPhaseAbort = 3 };

struct Series {
  std::string metric;
  std::vector<double> t;
  std::vector<double> value;
};

struct RunSeries {
  std::string run_id;
  std::vector<Series> series;
};

// Long format: run_id,t,metric,value. Values use round-trip precision.
void emit_plot_data(const std::vector<RunSeries>& runs, std::ostream& out);
void emit_plot_data(const std::vector<RunSeries>& runs, const std::string& path);

struct RunOptions {
  bool quiet = false;
  std::ostream* log = nullptr;  // summary lines; null silences them
};

// Runs the configured command into config.output.dir and returns the exit code.
int run(const RunConfig& config, const RunOptions& opt = {});

// Full CLI: argument parsing, environment overrides and error mapping.
int main_entry(int argc, char** argv);

}  // namespace hypar::cli

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "app.hpp"
#include "hypar/errors.hpp"
#include "run_config.hpp"

using namespace hypar;
using namespace hypar::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kSource = HYPAR_SOURCE_DIR;
const fs::path kOut = HYPAR_TEST_OUT;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh(const std::string& name) {
  fs::path d = kOut / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path write_json(const fs::path& p, const json& j) {
  std::ofstream(p) << j.dump(2);
  return p;
}

int invoke(std::vector<std::string> args) {
  std::vector<char*> argv;
  static std::string prog = "hypar";
  argv.push_back(prog.data());
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

RunConfig repo_config(const std::string& name, const fs::path& out) {
  RunConfig c = load_config((kSource / "configs" / name).string());
  c.output.dir = out.string();
  if (!c.data.path.empty()) c.data.path = (kSource / c.data.path).string();
  return c;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.command = "verify";
  c.grid = {2, 32, 3.0};
  c.system.name = "nsf";
  c.system.params = {{"mu", 2.0}, {"kappa", 0.5}};
  c.data.kind = "bump";
  c.data.amplitude = 0.02;
  c.iteration.eta = 0.25;
  c.iteration.p_max = 7;
  c.verify.maps = {"sin"};
  c.sweep.values = {0.1, 0.2};
  c.output.snapshots = true;
  c.seed = 99;
  RunConfig back = parse_config(json::parse(to_json(c).dump()));
  CHECK(back == c);
  for (const auto& name : {"norm_single_mode.json", "simulate_barotropic_1d.json", "critical_barotropic_2d.json",
                           "verify_inequalities.json", "sweep_eta.json", "decompose.json", "simulate_zero.json"}) {
    RunConfig r = load_config((kSource / "configs" / name).string());
    CHECK_MESSAGE(parse_config(json::parse(to_json(r).dump())) == r, name);
  }
}

TEST_CASE("config errors carry their path") {
  json j = {{"schema", kSchema}, {"grid", {{"d", 1}, {"N", 64}, {"foo", 1}}}};
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "$.grid.foo");
  }
  json wrong = {{"schema", kSchema}, {"iteration", {{"eta", "half"}}}};
  CHECK_THROWS_AS(parse_config(wrong), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"grid", {{"d", 1}}}}), ConfigError);

  fs::path dir = fresh("unknown_key");
  fs::path cfg = write_json(dir / "bad.json", j);
  CHECK(invoke({"--config", cfg.string(), "--quiet"}) == kConfigError);
  CHECK(invoke({"--config", (dir / "missing.json").string(), "--quiet"}) == kConfigError);
  CHECK(invoke({"frobnicate", "--config", cfg.string()}) == kConfigError);
}

TEST_CASE("plot data") {
  std::ostringstream empty;
  emit_plot_data({}, empty);
  CHECK(empty.str() == "run_id,t,metric,value\n");

  std::ostringstream rows;
  emit_plot_data({{"run_000", {{"linf", {0.0, 0.5}, {1.0, 0.25}}}}}, rows);
  CHECK(rows.str() == "run_id,t,metric,value\nrun_000,0,linf,1\nrun_000,0.5,linf,0.25\n");
}

TEST_CASE("zero data simulation") {
  fs::path dir = fresh("zero");
  RunConfig c = repo_config("simulate_zero.json", dir);
  CHECK(run(c, {true}) == kOk);
  json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "converged");
  CHECK(m["exit_code"] == 0);
  CHECK(fs::exists(dir / "diagnostics.json"));
  CHECK(fs::exists(dir / "timings.json"));
  for (const auto& row : read_csv(dir / "series.csv"))
    if (row[2] == "linf") CHECK(std::stod(row[3]) == 0.0);
}

TEST_CASE("single mode norm file") {
  fs::path dir = fresh("norm");
  RunConfig c = repo_config("norm_single_mode.json", dir);
  CHECK(run(c, {true}) == kOk);
  auto rows = read_csv(dir / "norm.csv");
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0][0] == "j");
  double total = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double v = std::stod(rows[i][1]);
    if (rows[i][0] == "1") CHECK(v == doctest::Approx(2.0 * 0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-12));
    else CHECK(v <= 1e-13);
    total += v;
  }
  CHECK(total == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("phase abort") {
  fs::path dir = fresh("phase");
  RunConfig c = repo_config("simulate_zero.json", dir);
  c.data.kind = "modes";
  c.data.amplitude = 3.0;
  CHECK(run(c, {true}) == kPhaseAbort);
  CHECK(fs::exists(dir / "phase_abort.json"));
  json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "phase-abort");
}

TEST_CASE("sweep over eta") {
  fs::path dir = fresh("sweep");
  RunConfig c = repo_config("sweep_eta.json", dir);
  c.grid.N = 32;
  c.iteration.p_max = 2;
  CHECK(run(c, {true}) == kOk);
  auto rows = read_csv(dir / "sweep.csv");
  REQUIRE(rows.size() == c.sweep.values.size() + 1);
  CHECK(rows[0][2] == "compute_T0");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 1; i < rows.size(); ++i) pts.emplace_back(std::stod(rows[i][1]), std::stod(rows[i][2]));
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].second > pts[i - 1].second);
  CHECK(fs::exists(dir / "run_000" / "config.json"));
}

TEST_CASE("runs are deterministic") {
  fs::path a = fresh("det_a") / "run", b = fresh("det_b") / "run";
  RunConfig c = repo_config("simulate_barotropic_1d.json", a);
  c.grid.N = 32;
  c.iteration.p_max = 3;
  c.monitors.apriori = false;
  CHECK(run(c, {true}) == run([&] { auto d = c; d.output.dir = b.string(); return d; }(), {true}));
  for (const auto* f : {"series.csv", "diagnostics.json"}) CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  json ma = json::parse(slurp(a / "manifest.json")), mb = json::parse(slurp(b / "manifest.json"));
  ma.erase("config");
  mb.erase("config");
  CHECK(ma == mb);
}

TEST_CASE("output directory precedence") {
  fs::path dir = fresh("precedence");
  RunConfig c = repo_config("simulate_zero.json", dir / "from_config");
  fs::path cfg = write_json(dir / "cfg.json", json::parse(to_json(c).dump()));
  ::setenv("HYPAR_OUT", (dir / "from_env").string().c_str(), 1);
  CHECK(invoke({"--config", cfg.string(), "--quiet"}) == kOk);
  CHECK(fs::exists(dir / "from_env" / "manifest.json"));
  CHECK(invoke({"--config", cfg.string(), "--out", (dir / "from_flag").string(), "--quiet"}) == kOk);
  CHECK(fs::exists(dir / "from_flag" / "manifest.json"));
  ::unsetenv("HYPAR_OUT");
  CHECK_FALSE(fs::exists(dir / "from_config"));
}

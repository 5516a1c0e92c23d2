#include "app.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>

#include "hypar/besov.hpp"
#include "hypar/corpus.hpp"
#include "hypar/errors.hpp"
#include "hypar/field_io.hpp"
#include "hypar/filter.hpp"
#include "hypar/parallel.hpp"
#include "hypar/spectral.hpp"
#include "hypar/verifier.hpp"

#ifndef HYPAR_VERSION
#define HYPAR_VERSION "0.0.0"
#endif

namespace hypar::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
  if (s.empty() || s.back() != '\n') out << '\n';
}

class Clock {
 public:
  void mark(const std::string& stage) {
    const auto now = std::chrono::steady_clock::now();
    std::lock_guard<std::mutex> lock(mu_);
    t_[stage] += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  ojson to_json() const {
    ojson j = ojson::object();
    for (const auto& [k, v] : t_) j[k] = v;
    return j;
  }

 private:
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::map<std::string, double> t_;
};

struct Outcome {
  int code = kOk;
  std::string status;
  std::map<std::string, double> constants;
  RunSeries series;
  std::vector<std::string> files;
};

struct Ctx {
  const RunConfig& cfg;
  fs::path dir;
  Clock& clock;
  bool csv() const { return has("csv"); }
  bool json() const { return has("json"); }
  bool has(const char* f) const {
    for (const auto& x : cfg.output.formats)
      if (x == f) return true;
    return false;
  }
};

Flavor flavor_of(const std::string& s) { return s == "homogeneous" ? Flavor::homogeneous : Flavor::nonhomogeneous; }

Field input_field(const RunConfig& c) {
  if (c.data.kind == "file") return read_field(c.data.path);
  const SystemSpec spec = build_system(c);
  return build_data(c, spec);
}

void add_series(RunSeries& rs, const std::string& metric, const std::vector<double>& t, const std::vector<double>& v) {
  rs.series.push_back({metric, t, v});
}

Outcome cmd_decompose(Ctx& ctx) {
  Outcome o;
  const Field u = input_field(ctx.cfg);
  const Flavor f = flavor_of(ctx.cfg.norm.flavor);
  const auto js = filter_bank(u.grid())->blocks(f);
  std::string csv = "component,j,l2\n";
  ojson j = ojson::array();
  for (int c = 0; c < u.components(); ++c) {
    double tail = 0.0;
    const auto b = block_l2_norms(u.component_field(c), f, &tail);
    for (std::size_t k = 0; k < js.size(); ++k) csv += std::to_string(c) + "," + std::to_string(js[k]) + "," + num(b[k]) + "\n";
    j.push_back({{"component", c}, {"j", js}, {"l2", b}, {"tail", tail}});
  }
  ctx.clock.mark("decompose");
  if (ctx.csv()) {
    write_text(ctx.dir / "blocks.csv", csv);
    o.files.push_back("blocks.csv");
  }
  if (ctx.json()) {
    write_text(ctx.dir / "blocks.json", j.dump(2));
    o.files.push_back("blocks.json");
  }
  o.status = "ok";
  return o;
}

Outcome cmd_norm(Ctx& ctx) {
  Outcome o;
  const Field u = input_field(ctx.cfg);
  const auto& n = ctx.cfg.norm;
  const NormRecord rec = besov_norm(u, BesovIndex{n.s, 2.0, n.r, flavor_of(n.flavor)});
  ctx.clock.mark("norm");
  if (ctx.csv()) {
    rec.write_csv((ctx.dir / "norm.csv").string());
    o.files.push_back("norm.csv");
  }
  if (ctx.json()) {
    rec.write_json((ctx.dir / "norm.json").string());
    o.files.push_back("norm.json");
  }
  o.constants["total"] = rec.total;
  o.status = "ok";
  return o;
}

void trajectory_series(RunSeries& rs, const Trajectory& V, const SystemSpec& spec, double s1, double s2,
                       Flavor f) {
  std::vector<double> t = V.times(), a(V.size()), b(V.size()), m(V.size());
  parallel_for(V.size(), [&](std::size_t i) {
    const Field& x = V.field(i);
    a[i] = spec.n1 > 0 ? besov(x.components_range(0, spec.n1), s1, 1.0, f) : 0.0;
    b[i] = besov(x.components_range(spec.n1, spec.n2), s2, 1.0, f);
    m[i] = x.linf();
  });
  if (spec.n1 > 0) add_series(rs, "norm_V1", t, a);
  add_series(rs, "norm_V2", t, b);
  add_series(rs, "linf", t, m);
}

void diag_series(RunSeries& rs, const IterationDiagnostics& d) {
  std::vector<double> p, X, r;
  for (const auto& it : d.iterations) {
    p.push_back(it.p);
    X.push_back(it.X);
    r.push_back(it.residual);
  }
  add_series(rs, "iteration_X", p, X);
  add_series(rs, "iteration_residual", p, r);
}

void write_series(Ctx& ctx, Outcome& o) {
  if (!ctx.csv()) return;
  emit_plot_data({o.series}, (ctx.dir / "series.csv").string());
  o.files.push_back("series.csv");
}

int status_code(const std::string& status) { return status == "hypothesis-failure" ? kViolation : kOk; }

Outcome cmd_simulate(Ctx& ctx) {
  Outcome o;
  const SystemSpec spec = build_system(ctx.cfg);
  const Field V0 = build_data(ctx.cfg, spec);
  ctx.clock.mark("setup");
  const IterationResult res = iterate_subcritical(spec, V0, ctx.cfg.iteration);
  ctx.clock.mark("iterate");
  o.status = res.diag.status;
  o.constants = res.diag.constants;
  o.code = status_code(o.status);
  o.series.run_id = ctx.dir.filename().string();
  const double s = ctx.cfg.iteration.s;
  trajectory_series(o.series, res.V, spec, s, s - 1.0, Flavor::nonhomogeneous);
  diag_series(o.series, res.diag);
  if (ctx.cfg.monitors.continuation) {
    const ContinuationSeries cs = continuation_monitor(res.V, spec);
    add_series(o.series, "continuation_integral", cs.t, cs.integral);
    add_series(o.series, "sup_grad_v1", cs.t, cs.sup_grad_v1);
    if (cs.reduced_applicable) add_series(o.series, "continuation_reduced", cs.t, cs.reduced);
  }
  ctx.clock.mark("monitors");
  if (ctx.json()) {
    write_text(ctx.dir / "diagnostics.json", res.diag.to_json());
    o.files.push_back("diagnostics.json");
  }
  if (ctx.cfg.monitors.apriori) {
    const LinearRunRecord rec{res.V, res.U_prev, res.theta};
    ojson j = ojson::array();
    for (const auto& r : {verify_apriori_hyperbolic(spec, rec, s), verify_apriori_parabolic(spec, rec, s - 1.0)}) {
      j.push_back(ojson::parse(r.to_json()));
      if (!r.pass()) o.code = kViolation;
    }
    write_text(ctx.dir / "apriori.json", j.dump(2));
    o.files.push_back("apriori.json");
    ctx.clock.mark("apriori");
  }
  if (ctx.cfg.output.snapshots) {
    res.V.save((ctx.dir / "trajectory").string());
    o.files.push_back("trajectory");
  }
  write_series(ctx, o);
  return o;
}

Outcome cmd_critical(Ctx& ctx) {
  Outcome o;
  const SystemSpec spec = build_system(ctx.cfg);
  const Field V0 = build_data(ctx.cfg, spec);
  ctx.clock.mark("setup");
  const CriticalResult res = solve_critical(spec, V0, ctx.cfg.iteration);
  ctx.clock.mark("solve");
  o.status = res.diag.status;
  o.constants = res.diag.constants;
  o.code = status_code(o.status);
  o.series.run_id = ctx.dir.filename().string();
  const double h = 0.5 * spec.d;
  trajectory_series(o.series, res.V, spec, h, h - 1.0, Flavor::homogeneous);
  if (ctx.json()) {
    write_text(ctx.dir / "diagnostics.json", res.diag.to_json());
    o.files.push_back("diagnostics.json");
  }
  if (ctx.cfg.monitors.apriori) {
    const LinearRunRecord rec{res.V, res.V, res.theta};
    ojson j = ojson::array();
    for (const auto& r : {verify_apriori_hyperbolic(spec, rec, h), verify_apriori_parabolic(spec, rec, h - 1.0)}) {
      j.push_back(ojson::parse(r.to_json()));
      if (!r.pass()) o.code = kViolation;
    }
    write_text(ctx.dir / "apriori.json", j.dump(2));
    o.files.push_back("apriori.json");
    ctx.clock.mark("apriori");
  }
  if (ctx.cfg.output.snapshots) {
    res.V.save((ctx.dir / "trajectory").string());
    o.files.push_back("trajectory");
  }
  write_series(ctx, o);
  return o;
}

ScalarMap map_named(const std::string& n) {
  if (n == "square") return map_square();
  if (n == "sin") return map_sin();
  if (n == "expm1") return map_expm1();
  return map_identity();
}

std::vector<InequalityReport> run_inequalities(const RunConfig& c, const Corpus& corpus) {
  const auto& v = c.verify;
  PairOptions po;
  po.max_pairs = static_cast<std::size_t>(v.max_pairs);
  std::vector<InequalityReport> out;
  auto append = [&](std::vector<InequalityReport> r) {
    for (auto& x : r) out.push_back(std::move(x));
  };
  for (const auto& q : v.inequalities) {
    if (q == "product") append(verify_product_law(corpus, v.s, po));
    if (q == "commutator") append(verify_commutator(corpus, v.sigma, po));
    if (q == "composition")
      for (const auto& m : v.maps) append(verify_composition(corpus, map_named(m), v.s, po));
    if (q == "garding") {
      RunConfig cc = c;
      cc.grid.N = corpus.grid.N;
      const SystemSpec spec = build_system(cc);
      if (spec.n2 == 0) throw InvalidArgument("verify: garding needs a parabolic block");
      const Field U = full_state(spec, build_data(cc, spec));
      std::vector<Vec> states;
      for (std::size_t p = 0; p < U.points(); p += std::max<std::size_t>(1, U.points() / 64)) {
        Vec st(spec.n());
        for (int k = 0; k < spec.n(); ++k) st(k) = U.at(k, p);
        states.push_back(st);
      }
      const EllipticityReport er = check_strong_ellipticity(spec, states, 2000, c.seed);
      out.push_back(verify_garding(spec, U, vector_members(corpus, spec.n2), v.eps, er.exact_min));
    }
  }
  return out;
}

Outcome cmd_verify(Ctx& ctx) {
  Outcome o;
  const auto& c = ctx.cfg;
  CorpusOptions co;
  co.per_family = c.verify.per_family;
  co.amplitude = c.verify.amplitude;
  const Corpus corpus = make_corpus(GridSpec{c.grid.d, c.grid.N, c.grid.L, 1}, c.seed, co);
  ctx.clock.mark("corpus");
  auto reports = run_inequalities(c, corpus);
  ctx.clock.mark("verify");
  if (c.verify.refine) {
    const auto fine = run_inequalities(c, corpus.at_resolution(2 * c.grid.N));
    for (std::size_t i = 0; i < reports.size() && i < fine.size(); ++i) compare_resolutions(reports[i], fine[i]);
    ctx.clock.mark("verify_refined");
  }
  std::string csv = "name,C,C_refined,variation,violations,pass\n";
  ojson j = ojson::array();
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.pass();
    csv += r.name + "," + num(r.C) + "," + num(r.C_refined) + "," + num(r.variation) + "," +
           std::to_string(r.violations.size()) + "," + (r.pass() ? "1" : "0") + "\n";
    j.push_back(ojson::parse(r.to_json()));
    o.constants["C_" + r.name] = r.C;
  }
  if (ctx.csv()) {
    write_text(ctx.dir / "verify.csv", csv);
    o.files.push_back("verify.csv");
  }
  if (ctx.json()) {
    write_text(ctx.dir / "reports.json", j.dump(2));
    o.files.push_back("reports.json");
  }
  o.status = ok ? "pass" : "violation";
  o.code = ok ? kOk : kViolation;
  return o;
}

Outcome dispatch(Ctx& ctx);

void set_parameter(RunConfig& c, const std::string& p, double v) {
  if (p == "eta") c.iteration.eta = v;
  if (p == "dt") c.iteration.dt = v;
  if (p == "s") c.iteration.s = v;
  if (p == "T") c.iteration.T = v;
  if (p == "R") c.iteration.R = v;
  if (p == "amplitude") c.data.amplitude = v;
}

std::string member_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", i);
  return buf;
}

int guarded(const std::function<Outcome()>& fn, Outcome& out, const fs::path& dir);

Outcome cmd_sweep(Ctx& ctx) {
  Outcome o;
  const auto& sw = ctx.cfg.sweep;
  const std::size_t n = sw.values.size();
  std::vector<Outcome> members(n);
  parallel_for(n, [&](std::size_t i) {
    RunConfig mc = ctx.cfg;
    mc.command = sw.member;
    set_parameter(mc, sw.parameter, sw.values[i]);
    const fs::path dir = ctx.dir / member_id(i);
    fs::create_directories(dir);
    Clock clock;
    Ctx sub{mc, dir, clock};
    members[i].code = guarded([&] { return dispatch(sub); }, members[i], dir);
    members[i].series.run_id = member_id(i);
    write_text(dir / "config.json", to_json(mc).dump(2));
  });
  ctx.clock.mark("sweep");
  std::string csv = "run_id," + sw.parameter + ",compute_T0,T,status,exit\n";
  std::vector<RunSeries> all;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = members[i];
    auto get = [&](const char* k) {
      auto it = m.constants.find(k);
      return it == m.constants.end() ? std::nan("") : it->second;
    };
    csv += member_id(i) + "," + num(sw.values[i]) + "," + num(get("T0")) + "," + num(get("T")) + "," + m.status + "," +
           std::to_string(m.code) + "\n";
    all.push_back(m.series);
    o.code = std::max(o.code, m.code);
  }
  write_text(ctx.dir / "sweep.csv", csv);
  o.files.push_back("sweep.csv");
  if (ctx.csv()) {
    emit_plot_data(all, (ctx.dir / "series.csv").string());
    o.files.push_back("series.csv");
  }
  o.status = o.code == kOk ? "ok" : "member-failure";
  return o;
}

Outcome dispatch(Ctx& ctx) {
  const auto& c = ctx.cfg.command;
  if (c == "decompose") return cmd_decompose(ctx);
  if (c == "norm") return cmd_norm(ctx);
  if (c == "simulate") return cmd_simulate(ctx);
  if (c == "solve-critical") return cmd_critical(ctx);
  if (c == "verify") return cmd_verify(ctx);
  if (c == "sweep") return cmd_sweep(ctx);
  throw ConfigError("$.command", "unknown command " + c);
}

int guarded(const std::function<Outcome()>& fn, Outcome& out, const fs::path& dir) {
  try {
    out = fn();
    return out.code;
  } catch (const PhaseError& e) {
    ojson j;
    j["error"] = e.what();
    j["time"] = e.time();
    j["point"] = e.point();
    j["state"] = e.state();
    write_text(dir / "phase_abort.json", j.dump(2));
    out.status = "phase-abort";
    out.files.push_back("phase_abort.json");
    std::cerr << "phase-space abort: " << e.what() << "\n";
    return out.code = kPhaseAbort;
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    out.status = "config-error";
    return out.code = kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    out.status = "config-error";
    return out.code = kConfigError;
  } catch (const CflError& e) {
    std::cerr << e.what() << " (admissible dt " << e.admissible_dt() << ")\n";
    out.status = "cfl";
    return out.code = kConfigError;
  }
}

}  // namespace

void emit_plot_data(const std::vector<RunSeries>& runs, std::ostream& out) {
  out << "run_id,t,metric,value\n";
  for (const auto& r : runs)
    for (const auto& s : r.series)
      for (std::size_t i = 0; i < s.t.size() && i < s.value.size(); ++i)
        out << r.run_id << ',' << num(s.t[i]) << ',' << s.metric << ',' << num(s.value[i]) << '\n';
}

void emit_plot_data(const std::vector<RunSeries>& runs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  emit_plot_data(runs, out);
}

int run(const RunConfig& config, const RunOptions& opt) {
  const fs::path dir = config.output.dir;
  fs::create_directories(dir);
  Clock clock;
  Ctx ctx{config, dir, clock};
  Outcome o;
  const int code = guarded([&] { return dispatch(ctx); }, o, dir);

  ojson m;
  m["schema"] = kSchema;
  m["software"] = "hypar";
  m["version"] = HYPAR_VERSION;
  m["profile_hash"] = profile_hash();
  m["command"] = config.command;
  m["seed"] = config.seed;
  m["status"] = o.status;
  m["exit_code"] = code;
  m["constants"] = ojson::object();
  for (const auto& [k, v] : o.constants) m["constants"][k] = std::isfinite(v) ? ojson(v) : ojson(nullptr);
  m["outputs"] = o.files;
  m["timings"] = "timings.json";
  m["config"] = to_json(config);
  write_text(dir / "manifest.json", m.dump(2));
  write_text(dir / "timings.json", clock.to_json().dump(2));
  if (!opt.quiet && opt.log) *opt.log << config.command << ": " << o.status << " (exit " << code << ") -> " << dir.string() << "\n";
  return code;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"hypar: Littlewood-Paley analysis and hyperbolic-parabolic solvers"};
  std::string command, config_path, out;
  std::uint64_t seed = 0;
  unsigned threads_n = 0;
  bool quiet = false;
  app.add_option("command", command, "Override the config command")
      ->check(CLI::IsMember({"decompose", "norm", "simulate", "solve-critical", "verify", "sweep"}));
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  auto* out_opt = app.add_option("--out", out, "Output directory");
  auto* seed_opt = app.add_option("--seed", seed, "Seed override");
  auto* thr_opt = app.add_option("--threads", threads_n, "Worker threads (0: all cores)");
  app.add_flag("--quiet", quiet, "Suppress the summary line");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return kConfigError;
  }
  if (!command.empty()) cfg.command = command;
  if (const char* env = std::getenv("HYPAR_OUT"); env && *env) cfg.output.dir = env;
  if (*out_opt) cfg.output.dir = out;
  if (*seed_opt) cfg.seed = seed;
  if (const char* env = std::getenv("HYPAR_THREADS"); env && *env) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0') {
      std::cerr << "config error at HYPAR_THREADS: not an unsigned integer\n";
      return kConfigError;
    }
    set_threads(static_cast<unsigned>(v));
  }
  if (*thr_opt) set_threads(threads_n);
  RunOptions opt;
  opt.quiet = quiet;
  opt.log = &std::cout;
  try {
    return run(cfg, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kViolation;
  }
}

}  // namespace hypar::cli

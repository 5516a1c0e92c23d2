#include "run_config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "hypar/errors.hpp"
#include "hypar/field_io.hpp"

namespace hypar::cli {

namespace {

using json = nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string at(const char* key) const { return path_ + "." + key; }

  const json* take(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void get(const char* key, double& out) {
    if (auto v = take(key)) {
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
    }
  }
  void get(const char* key, int& out) {
    if (auto v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void get(const char* key, std::size_t& out) {
    if (auto v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
      out = v->get<std::size_t>();
    }
  }
  void get(const char* key, std::uint64_t& out, int) {
    if (auto v = take(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(at(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void get(const char* key, bool& out) {
    if (auto v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected a boolean");
      out = v->get<bool>();
    }
  }
  void get(const char* key, std::string& out) {
    if (auto v = take(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const char* key, std::vector<double>& out) {
    if (auto v = take(key)) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back((*v)[i].get<double>());
      }
    }
  }
  void get(const char* key, std::vector<std::string>& out) {
    if (auto v = take(key)) {
      if (!v->is_array()) throw ConfigError(at(key), "expected an array of strings");
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*v)[i].get<std::string>());
      }
    }
  }
  void get(const char* key, std::map<std::string, double>& out) {
    if (auto v = take(key)) {
      if (!v->is_object()) throw ConfigError(at(key), "expected an object of numbers");
      out.clear();
      for (auto it = v->begin(); it != v->end(); ++it) {
        if (!it.value().is_number()) throw ConfigError(at(key) + "." + it.key(), "expected a number");
        out[it.key()] = it.value().get<double>();
      }
    }
  }

  void one_of(const char* key, const std::string& v, std::initializer_list<const char*> allowed) const {
    for (const char* a : allowed)
      if (v == a) return;
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    throw ConfigError(at(key), msg);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path_ + "." + it.key(), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
void section(Reader& parent, const char* key, F&& fn) {
  if (auto v = parent.take(key)) {
    Reader r(*v, parent.at(key));
    fn(r);
    r.finish();
  }
}

void check_params(const SystemConfig& s, std::initializer_list<const char*> allowed) {
  for (const auto& [k, v] : s.params) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw ConfigError("$.system.params." + k, "unknown parameter for system " + s.name);
  }
}

double param(const SystemConfig& s, const char* key, double def) {
  auto it = s.params.find(key);
  return it == s.params.end() ? def : it->second;
}

}  // namespace

bool RunConfig::operator==(const RunConfig& o) const {
  const auto& a = iteration;
  const auto& b = o.iteration;
  const bool it = a.s == b.s && a.R == b.R && a.eta == b.eta && a.T == b.T && a.m == b.m && a.dt == b.dt &&
                  a.p_max == b.p_max && a.contraction_tol == b.contraction_tol && a.C == b.C && a.c_T0 == b.c_T0 &&
                  a.C_T0 == b.C_T0 && a.cfl_safety == b.cfl_safety && a.snapshot_stride == b.snapshot_stride &&
                  a.smoothing_levels == b.smoothing_levels;
  return it && schema == o.schema && command == o.command && grid == o.grid && system == o.system &&
         data == o.data && norm == o.norm && verify == o.verify && sweep == o.sweep && monitors == o.monitors &&
         output == o.output && seed == o.seed;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  Reader r(j, "$");
  if (!r.has("schema")) throw ConfigError("$.schema", "missing");
  r.get("schema", c.schema);
  if (c.schema != kSchema) throw ConfigError("$.schema", "unsupported schema '" + c.schema + "'");
  r.get("command", c.command);
  r.one_of("command", c.command, {"decompose", "norm", "simulate", "solve-critical", "verify", "sweep"});
  section(r, "grid", [&](Reader& g) {
    g.get("d", c.grid.d);
    g.get("N", c.grid.N);
    g.get("L", c.grid.L);
    if (c.grid.d < 1 || c.grid.d > 3) throw ConfigError(g.at("d"), "must be 1, 2 or 3");
    if (c.grid.N < 4 || (c.grid.N & (c.grid.N - 1))) throw ConfigError(g.at("N"), "must be a power of two >= 4");
    if (!(c.grid.L > 0.0)) throw ConfigError(g.at("L"), "must be positive");
  });
  section(r, "system", [&](Reader& s) {
    s.get("name", c.system.name);
    s.one_of("name", c.system.name, {"barotropic", "nsf", "heat"});
    s.get("params", c.system.params);
  });
  section(r, "data", [&](Reader& d) {
    d.get("kind", c.data.kind);
    d.one_of("kind", c.data.kind, {"zero", "modes", "bump", "file"});
    d.get("amplitude", c.data.amplitude);
    d.get("kmax", c.data.kmax);
    d.get("width", c.data.width);
    d.get("path", c.data.path);
    if (c.data.kmax < 1) throw ConfigError(d.at("kmax"), "must be at least 1");
    if (!(c.data.width > 0.0)) throw ConfigError(d.at("width"), "must be positive");
    if (c.data.kind == "file" && c.data.path.empty()) throw ConfigError(d.at("path"), "required for kind file");
  });
  section(r, "iteration", [&](Reader& it) {
    auto& k = c.iteration;
    it.get("s", k.s);
    it.get("R", k.R);
    it.get("eta", k.eta);
    it.get("T", k.T);
    it.get("m", k.m);
    it.get("dt", k.dt);
    it.get("p_max", k.p_max);
    it.get("contraction_tol", k.contraction_tol);
    it.get("C", k.C);
    it.get("c_T0", k.c_T0);
    it.get("C_T0", k.C_T0);
    it.get("cfl_safety", k.cfl_safety);
    it.get("snapshot_stride", k.snapshot_stride);
    it.get("smoothing_levels", k.smoothing_levels);
    try {
      k.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("$.iteration", e.what());
    }
  });
  section(r, "norm", [&](Reader& n) {
    n.get("s", c.norm.s);
    n.get("r", c.norm.r);
    n.get("flavor", c.norm.flavor);
    n.one_of("flavor", c.norm.flavor, {"homogeneous", "nonhomogeneous"});
    if (!(c.norm.r == 1.0 || c.norm.r == 2.0 || std::isinf(c.norm.r)))
      throw ConfigError(n.at("r"), "must be 1 or 2");
  });
  section(r, "verify", [&](Reader& v) {
    v.get("inequalities", c.verify.inequalities);
    for (const auto& q : c.verify.inequalities)
      v.one_of("inequalities", q, {"product", "commutator", "composition", "garding"});
    v.get("maps", c.verify.maps);
    for (const auto& m : c.verify.maps) v.one_of("maps", m, {"square", "sin", "expm1", "identity"});
    v.get("s", c.verify.s);
    v.get("sigma", c.verify.sigma);
    v.get("eps", c.verify.eps);
    v.get("per_family", c.verify.per_family);
    v.get("amplitude", c.verify.amplitude);
    v.get("max_pairs", c.verify.max_pairs);
    v.get("refine", c.verify.refine);
    if (c.verify.per_family < 1) throw ConfigError(v.at("per_family"), "must be positive");
    if (c.verify.max_pairs < 1) throw ConfigError(v.at("max_pairs"), "must be positive");
  });
  section(r, "sweep", [&](Reader& s) {
    s.get("parameter", c.sweep.parameter);
    s.one_of("parameter", c.sweep.parameter, {"eta", "dt", "s", "T", "R", "amplitude"});
    s.get("values", c.sweep.values);
    s.get("member", c.sweep.member);
    s.one_of("member", c.sweep.member, {"simulate", "solve-critical"});
  });
  section(r, "monitors", [&](Reader& m) {
    m.get("continuation", c.monitors.continuation);
    m.get("apriori", c.monitors.apriori);
  });
  section(r, "output", [&](Reader& o) {
    o.get("dir", c.output.dir);
    o.get("formats", c.output.formats);
    for (const auto& f : c.output.formats) o.one_of("formats", f, {"csv", "json"});
    o.get("snapshots", c.output.snapshots);
  });
  r.get("seed", c.seed, 0);
  r.finish();
  if (c.command == "sweep" && c.sweep.values.empty()) throw ConfigError("$.sweep.values", "required for sweep");
  if (c.system.name == "barotropic") check_params(c.system, {"A", "gamma", "mu", "lambda", "rho_bar"});
  if (c.system.name == "nsf") check_params(c.system, {"R", "cv", "mu", "lambda", "kappa", "rho_bar", "theta_bar"});
  if (c.system.name == "heat") check_params(c.system, {"n2", "diffusivity"});
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path, std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["schema"] = c.schema;
  j["command"] = c.command;
  j["grid"] = {{"d", c.grid.d}, {"N", c.grid.N}, {"L", c.grid.L}};
  j["system"] = {{"name", c.system.name}, {"params", c.system.params}};
  j["data"] = {{"kind", c.data.kind}, {"amplitude", c.data.amplitude}, {"kmax", c.data.kmax},
               {"width", c.data.width}, {"path", c.data.path}};
  const auto& k = c.iteration;
  j["iteration"] = {{"s", k.s},
                    {"R", k.R},
                    {"eta", k.eta},
                    {"T", k.T},
                    {"m", k.m},
                    {"dt", k.dt},
                    {"p_max", k.p_max},
                    {"contraction_tol", k.contraction_tol},
                    {"C", k.C},
                    {"c_T0", k.c_T0},
                    {"C_T0", k.C_T0},
                    {"cfl_safety", k.cfl_safety},
                    {"snapshot_stride", k.snapshot_stride},
                    {"smoothing_levels", k.smoothing_levels}};
  j["norm"] = {{"s", c.norm.s}, {"r", c.norm.r}, {"flavor", c.norm.flavor}};
  j["verify"] = {{"inequalities", c.verify.inequalities},
                 {"maps", c.verify.maps},
                 {"s", c.verify.s},
                 {"sigma", c.verify.sigma},
                 {"eps", c.verify.eps},
                 {"per_family", c.verify.per_family},
                 {"amplitude", c.verify.amplitude},
                 {"max_pairs", c.verify.max_pairs},
                 {"refine", c.verify.refine}};
  j["sweep"] = {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}, {"member", c.sweep.member}};
  j["monitors"] = {{"continuation", c.monitors.continuation}, {"apriori", c.monitors.apriori}};
  j["output"] = {{"dir", c.output.dir}, {"formats", c.output.formats}, {"snapshots", c.output.snapshots}};
  j["seed"] = c.seed;
  return j;
}

SystemSpec build_system(const RunConfig& c) {
  const auto& s = c.system;
  const int d = c.grid.d;
  if (s.name == "barotropic") {
    auto law = gamma_law(param(s, "A", 1.0), param(s, "gamma", 2.0), param(s, "mu", 1.0), param(s, "lambda", 0.0));
    return assemble_barotropic(d, law, param(s, "rho_bar", 1.0));
  }
  if (s.name == "nsf") {
    GasLaw gas{param(s, "R", 1.0), param(s, "cv", 1.0)};
    Transport tr{param(s, "mu", 1.0), param(s, "lambda", 0.0), param(s, "kappa", 1.0)};
    return assemble_nsf(d, gas, tr, param(s, "rho_bar", 1.0), param(s, "theta_bar", 1.0));
  }
  const double n2 = param(s, "n2", 1.0);
  if (n2 < 1.0 || n2 != std::floor(n2)) throw ConfigError("$.system.params.n2", "must be a positive integer");
  return assemble_heat(d, static_cast<int>(n2), param(s, "diffusivity", 1.0));
}

GridSpec build_grid(const RunConfig& c, int ncomp) {
  GridSpec g{c.grid.d, c.grid.N, c.grid.L, ncomp};
  g.validate();
  return g;
}

Field build_data(const RunConfig& c, const SystemSpec& spec) {
  const int n = spec.n();
  const GridSpec g = build_grid(c, n);
  const std::size_t P = g.points();
  const auto& dc = c.data;
  if (dc.kind == "zero") return Field(g);
  if (dc.kind == "file") {
    Field f = read_field(dc.path);
    if (!(f.grid() == g)) throw ConfigError("$.data.path", "field grid does not match grid and system");
    return f;
  }
  std::vector<double> v(n * P, 0.0);
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto coord = [&](std::size_t p, int a) {
    for (int b = g.d - 1; b > a; --b) p /= g.N;
    return static_cast<double>(p % g.N) * g.dx();
  };
  if (dc.kind == "modes") {
    // Each component: sum over 1 <= k <= kmax along every axis of a cos + b sin, coefficients in [-1, 1].
    for (int comp = 0; comp < n; ++comp)
      for (int a = 0; a < g.d; ++a)
        for (int k = 1; k <= dc.kmax; ++k) {
          const double ca = unit(rng), sa = unit(rng);
          for (std::size_t p = 0; p < P; ++p) {
            const double x = g.k0() * k * coord(p, a);
            v[comp * P + p] += dc.amplitude * (ca * std::cos(x) + sa * std::sin(x));
          }
        }
  } else {
    std::vector<double> w(n);
    for (double& x : w) x = unit(rng);
    for (std::size_t p = 0; p < P; ++p) {
      double r2 = 0.0;
      for (int a = 0; a < g.d; ++a) {
        const double x = coord(p, a) - 0.5 * g.L;
        r2 += x * x;
      }
      const double b = dc.amplitude * std::exp(-0.5 * r2 / (dc.width * dc.width));
      for (int comp = 0; comp < n; ++comp) v[comp * P + p] = (comp == 0 ? 1.0 : w[comp]) * b;
    }
  }
  return Field(g, std::move(v));
}

}  // namespace hypar::cli

#include "hypar/trajectory.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hypar/errors.hpp"
#include "hypar/field_io.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

std::vector<double> block_l2_norms(const Field& u, Flavor f, double* tail) {
  const GridSpec& g = u.grid();
  auto fb = filter_bank(g);
  auto ft = freq_table(g);
  const auto& spec = u.spectrum();
  const std::size_t nm = g.modes();
  // |u_hat|^2 summed over components, with Hermitian weights.
  std::vector<double> power(nm, 0.0);
  for (int c = 0; c < g.n; ++c)
    for (std::size_t m = 0; m < nm; ++m) power[m] += ft->weight[m] * std::norm(spec[c * nm + m]);
  const double np = static_cast<double>(g.points());
  const double scale = g.volume() / (np * np);
  auto js = fb->blocks(f);
  std::vector<double> out(js.size(), 0.0);
  for (std::size_t b = 0; b < js.size(); ++b) {
    auto mult = fb->block({js[b], f});
    if (mult.empty()) continue;
    double s = 0.0;
    for (std::size_t m = 0; m < nm; ++m)
      if (mult[m] != 0.0) s += mult[m] * mult[m] * power[m];
    out[b] = std::sqrt(s * scale);
  }
  if (tail) *tail = f == Flavor::homogeneous ? std::sqrt(power[0] * scale) : 0.0;
  return out;
}

Trajectory::Trajectory() { reset_cache(); }

void Trajectory::reset_cache() {
  cache_[0] = std::make_shared<Cache>();
  cache_[1] = std::make_shared<Cache>();
}

void Trajectory::push(double t, Field f) {
  if (!fields_.empty()) {
    if (!(f.grid() == fields_.front().grid())) throw InvalidArgument("trajectory: grid mismatch");
    if (!(t > times_.back())) throw InvalidArgument("trajectory: times must increase");
  }
  times_.push_back(t);
  fields_.push_back(std::move(f));
  reset_cache();
}

void Trajectory::reserve(std::size_t n) {
  times_.reserve(n);
  fields_.reserve(n);
}

const GridSpec& Trajectory::grid() const {
  if (fields_.empty()) throw InvalidArgument("trajectory is empty");
  return fields_.front().grid();
}

bool Trajectory::uniform(double rel_tol) const {
  if (times_.size() < 3) return true;
  const double h = times_[1] - times_[0];
  for (std::size_t i = 2; i < times_.size(); ++i)
    if (std::abs(times_[i] - times_[i - 1] - h) > rel_tol * h) return false;
  return true;
}

const BlockNorms& Trajectory::block_norms(Flavor f) const {
  const int slot = f == Flavor::homogeneous ? 0 : 1;
  auto c = cache_[slot];
  std::call_once(c->once, [&] {
    c->norms.j = filter_bank(grid())->blocks(f);
    c->norms.values.resize(fields_.size());
    c->norms.tail.resize(fields_.size());
    for (std::size_t i = 0; i < fields_.size(); ++i)
      c->norms.values[i] = block_l2_norms(fields_[i], f, &c->norms.tail[i]);
  });
  return c->norms;
}

Trajectory Trajectory::components(int first, int count) const {
  Trajectory out;
  out.scheme = scheme;
  out.dt = dt;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.push(times_[i], fields_[i].components_range(first, count));
  return out;
}

Trajectory Trajectory::subsample(std::size_t stride) const {
  Trajectory out;
  out.scheme = scheme;
  out.dt = dt;
  if (stride == 0) stride = 1;
  for (std::size_t i = 0; i < size(); i += stride) out.push(times_[i], fields_[i]);
  if (!empty() && (size() - 1) % stride != 0) out.push(times_.back(), fields_.back());
  return out;
}

Trajectory Trajectory::time_derivative() const {
  Trajectory out;
  out.scheme = scheme;
  out.dt = dt;
  const std::size_t n = size();
  if (n < 2) {
    for (std::size_t i = 0; i < n; ++i) out.push(times_[i], Field(fields_[i].grid()));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Field d(fields_[i].grid());
    if (n == 2) {
      d = (1.0 / (times_[1] - times_[0])) * (fields_[1] - fields_[0]);
    } else if (i == 0) {
      const double h = times_[1] - times_[0];
      d.axpy(-1.5 / h, fields_[0]).axpy(2.0 / h, fields_[1]).axpy(-0.5 / h, fields_[2]);
    } else if (i == n - 1) {
      const double h = times_[n - 1] - times_[n - 2];
      d.axpy(1.5 / h, fields_[n - 1]).axpy(-2.0 / h, fields_[n - 2]).axpy(0.5 / h, fields_[n - 3]);
    } else {
      const double h = times_[i + 1] - times_[i - 1];
      d.axpy(1.0 / h, fields_[i + 1]).axpy(-1.0 / h, fields_[i - 1]);
    }
    out.push(times_[i], std::move(d));
  }
  return out;
}

Trajectory operator-(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw InvalidArgument("trajectory difference: sample count mismatch");
  Trajectory out;
  out.scheme = a.scheme;
  out.dt = a.dt;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.time(i) - b.time(i)) > 1e-12 * std::max(1.0, std::abs(a.time(i))))
      throw InvalidArgument("trajectory difference: time mismatch");
    out.push(a.time(i), a.field(i) - b.field(i));
  }
  return out;
}

void Trajectory::save(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::ordered_json m;
  m["format"] = "hypar-trajectory";
  m["version"] = 1;
  m["scheme"] = scheme;
  m["dt"] = dt;
  if (!empty()) {
    const GridSpec& g = grid();
    m["grid"] = {{"d", g.d}, {"N", g.N}, {"L", g.L}, {"n", g.n}};
  }
  m["times"] = times_;
  std::vector<std::string> files;
  for (std::size_t i = 0; i < size(); ++i) {
    std::ostringstream name;
    name << "snap_" << std::setw(6) << std::setfill('0') << i << ".hpfd";
    write_field(fields_[i], (fs::path(dir) / name.str()).string());
    files.push_back(name.str());
  }
  m["files"] = files;
  std::ofstream os((fs::path(dir) / "manifest.json").string());
  os << std::setprecision(17) << m.dump(2) << "\n";
}

Trajectory Trajectory::load(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is((fs::path(dir) / "manifest.json").string());
  if (!is) throw Error("missing manifest in " + dir);
  auto m = nlohmann::json::parse(is);
  Trajectory t;
  t.scheme = m.value("scheme", "");
  t.dt = m.value("dt", 0.0);
  auto times = m.at("times").get<std::vector<double>>();
  auto files = m.at("files").get<std::vector<std::string>>();
  if (times.size() != files.size()) throw Error("manifest: times/files mismatch");
  for (std::size_t i = 0; i < times.size(); ++i) t.push(times[i], read_field((fs::path(dir) / files[i]).string()));
  return t;
}

double time_norm(const std::vector<double>& t, const std::vector<double>& f, double rho) {
  if (t.size() != f.size()) throw InvalidArgument("time_norm: size mismatch");
  if (f.empty()) return 0.0;
  if (std::isinf(rho)) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i)
    s += 0.5 * (t[i] - t[i - 1]) * (std::pow(std::abs(f[i]), rho) + std::pow(std::abs(f[i - 1]), rho));
  return std::pow(s, 1.0 / rho);
}

}  // namespace hypar

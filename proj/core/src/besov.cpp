#include "hypar/besov.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "hypar/errors.hpp"
#include "hypar/spectral.hpp"

namespace hypar {

namespace {

double block_weight(int j, double s) { return std::exp2(j * s); }

void check_index(const BesovIndex& idx) {
  if (!(idx.p == 2.0 || std::isinf(idx.p))) throw InvalidArgument("besov: p must be 2 or infinity");
  if (!(idx.r >= 1.0)) throw InvalidArgument("besov: r must be >= 1");
}

// Sup norm of each block, for p = infinity.
std::vector<double> block_sup_norms(const Field& u, Flavor f) {
  auto fb = filter_bank(u.grid());
  auto js = fb->blocks(f);
  std::vector<double> out(js.size(), 0.0);
  for (std::size_t b = 0; b < js.size(); ++b) {
    auto mult = fb->block({js[b], f});
    if (mult.empty()) continue;
    out[b] = apply_multiplier(u, std::vector<double>(mult.begin(), mult.end())).linf();
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

}  // namespace

double lr_norm(const std::vector<double>& v, double r) {
  if (std::isinf(r)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (r == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), r);
  return std::pow(s, 1.0 / r);
}

NormRecord besov_norm(const Field& u, const BesovIndex& idx) {
  check_index(idx);
  if (!u.finite()) throw InvalidArgument("besov: field has non-finite values");
  NormRecord rec;
  rec.idx = idx;
  rec.grid = u.grid();
  rec.profile = profile_hash();
  auto fb = filter_bank(u.grid());
  rec.j = fb->blocks(idx.flavor);
  std::vector<double> raw = std::isinf(idx.p) ? block_sup_norms(u, idx.flavor)
                                              : block_l2_norms(u, idx.flavor, &rec.tail);
  if (std::isinf(idx.p) && idx.flavor == Flavor::homogeneous) {
    const auto& s = u.spectrum();
    rec.tail = std::abs(s[0]) / static_cast<double>(u.points());
  }
  rec.per_block.resize(raw.size());
  for (std::size_t b = 0; b < raw.size(); ++b) rec.per_block[b] = block_weight(rec.j[b], idx.s) * raw[b];
  rec.total = lr_norm(rec.per_block, idx.r);
  if (idx.flavor == Flavor::homogeneous && rec.tail > 1e-12 * std::max(u.l2(), 1e-300))
    rec.warning = "zero-mode mass excluded from homogeneous blocks";
  return rec;
}

double besov(const Field& u, double s, double r, Flavor f) {
  return besov_norm(u, BesovIndex{s, 2.0, r, f}).total;
}

NormRecord chemin_lerner_norm(const Trajectory& traj, const BesovIndex& idx, double rho) {
  check_index(idx);
  if (traj.empty()) throw InvalidArgument("chemin-lerner: empty trajectory");
  if (!traj.uniform()) throw InvalidArgument("chemin-lerner: time samples must be uniform");
  NormRecord rec;
  rec.idx = idx;
  rec.rho = rho;
  rec.grid = traj.grid();
  rec.profile = profile_hash();
  rec.samples = traj.size();
  std::vector<std::vector<double>> rows;
  if (std::isinf(idx.p)) {
    rec.j = filter_bank(traj.grid())->blocks(idx.flavor);
    for (const auto& f : traj.fields()) rows.push_back(block_sup_norms(f, idx.flavor));
  } else {
    const auto& bn = traj.block_norms(idx.flavor);
    rec.j = bn.j;
    rows = bn.values;
    for (double t : bn.tail) rec.tail = std::max(rec.tail, t);
  }
  rec.per_block.assign(rec.j.size(), 0.0);
  std::vector<double> series(traj.size());
  for (std::size_t b = 0; b < rec.j.size(); ++b) {
    for (std::size_t i = 0; i < traj.size(); ++i) series[i] = rows[i][b];
    rec.per_block[b] = block_weight(rec.j[b], idx.s) * time_norm(traj.times(), series, rho);
  }
  rec.total = lr_norm(rec.per_block, idx.r);
  return rec;
}

std::vector<double> besov_series(const Trajectory& traj, const BesovIndex& idx) {
  check_index(idx);
  std::vector<double> out(traj.size());
  if (std::isinf(idx.p)) {
    for (std::size_t i = 0; i < traj.size(); ++i) out[i] = besov_norm(traj.field(i), idx).total;
    return out;
  }
  const auto& bn = traj.block_norms(idx.flavor);
  std::vector<double> w(bn.j.size());
  for (std::size_t b = 0; b < bn.j.size(); ++b) w[b] = block_weight(bn.j[b], idx.s);
  std::vector<double> tmp(bn.j.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    for (std::size_t b = 0; b < bn.j.size(); ++b) tmp[b] = w[b] * bn.values[i][b];
    out[i] = lr_norm(tmp, idx.r);
  }
  return out;
}

double lebesgue_besov_norm(const Trajectory& traj, const BesovIndex& idx, double rho) {
  if (traj.empty()) throw InvalidArgument("lebesgue-besov: empty trajectory");
  return time_norm(traj.times(), besov_series(traj, idx), rho);
}

InterpolationReport interpolation_check(const Trajectory& traj, double s, Flavor f) {
  InterpolationReport rep;
  if (traj.empty()) return rep;
  rep.lhs = lebesgue_besov_norm(traj, {s + 1.0, 2.0, 1.0, f}, 2.0);
  const double a = lebesgue_besov_norm(traj, {s, 2.0, 1.0, f}, kInf);
  const double b = lebesgue_besov_norm(traj, {s + 2.0, 2.0, 1.0, f}, 1.0);
  rep.rhs = std::sqrt(a * b);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  rep.ok = rep.lhs <= rep.rhs * (1.0 + 1e-6) + 1e-300;
  return rep;
}

LogInterpolationReport log_interpolation_check(const Trajectory& traj) {
  LogInterpolationReport rep;
  if (traj.empty()) throw InvalidArgument("log interpolation: empty trajectory");
  const double h = 0.5 * traj.grid().d;
  const Flavor f = Flavor::homogeneous;
  rep.lhs = lebesgue_besov_norm(traj, {h, 2.0, 1.0, f}, 1.0);
  rep.x = chemin_lerner_norm(traj, {h, 2.0, kInf, f}, 1.0).total;
  rep.y = chemin_lerner_norm(traj, {h - 1.0, 2.0, kInf, f}, 1.0).total +
          chemin_lerner_norm(traj, {h + 1.0, 2.0, kInf, f}, 1.0).total;
  if (rep.x <= 0.0) return rep;
  rep.log_factor = std::log(std::numbers::e + rep.y / rep.x);
  rep.ratio = rep.lhs / (rep.x * rep.log_factor);
  return rep;
}

std::string NormRecord::to_csv() const {
  std::ostringstream os;
  os << "j,per_block,cumulative\n";
  std::vector<double> acc;
  for (std::size_t b = 0; b < j.size(); ++b) {
    acc.push_back(per_block[b]);
    os << j[b] << "," << num(per_block[b]) << "," << num(lr_norm(acc, idx.r)) << "\n";
  }
  return os.str();
}

std::string NormRecord::to_json() const {
  auto enc = [](double v) -> nlohmann::ordered_json {
    if (std::isinf(v)) return "inf";
    return v;
  };
  nlohmann::ordered_json o;
  o["s"] = idx.s;
  o["p"] = enc(idx.p);
  o["r"] = enc(idx.r);
  o["flavor"] = idx.flavor == Flavor::homogeneous ? "homogeneous" : "nonhomogeneous";
  if (rho > 0.0) o["rho"] = enc(rho);
  o["total"] = total;
  o["tail"] = tail;
  o["samples"] = samples;
  o["j"] = j;
  o["per_block"] = per_block;
  o["grid"] = {{"d", grid.d}, {"N", grid.N}, {"L", grid.L}, {"n", grid.n}};
  std::ostringstream h;
  h << std::hex << std::setw(16) << std::setfill('0') << profile;
  o["profile_hash"] = h.str();
  if (!warning.empty()) o["warning"] = warning;
  return o.dump(2);
}

void NormRecord::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << to_csv();
}

void NormRecord::write_json(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << to_json() << "\n";
}

}  // namespace hypar

#include "hypar/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>

#include "hypar/errors.hpp"

namespace hypar {

namespace {

constexpr std::uint32_t kVersion = 1;

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("field file truncated");
  return to_le(v);
}

}  // namespace

void write_field(const Field& u, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write("HPFD", 4);
  const GridSpec& g = u.grid();
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.d));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.N));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n));
  put<double>(os, g.L);
  for (double v : u.values()) put<double>(os, v);
  if (!os) throw Error("write failed: " + path);
}

Field read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "HPFD", 4) != 0) throw Error(path + ": not a field file");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw Error(path + ": unsupported field version " + std::to_string(version));
  GridSpec g;
  g.d = static_cast<int>(get<std::uint32_t>(is));
  g.N = static_cast<int>(get<std::uint32_t>(is));
  g.n = static_cast<int>(get<std::uint32_t>(is));
  g.L = get<double>(is);
  g.validate();
  std::vector<double> v(g.points() * g.n);
  for (double& x : v) x = get<double>(is);
  return Field(g, std::move(v));
}

void write_slice_csv(const Field& u, const std::string& path, int axis) {
  const GridSpec& g = u.grid();
  if (axis < 0 || axis >= g.d) throw InvalidArgument("slice axis out of range");
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "x";
  for (int c = 0; c < g.n; ++c) os << ",u" << c;
  os << "\n";
  std::size_t stride = 1;
  for (int a = g.d - 1; a > axis; --a) stride *= static_cast<std::size_t>(g.N);
  for (int i = 0; i < g.N; ++i) {
    os << i * g.dx();
    for (int c = 0; c < g.n; ++c) os << "," << u.at(c, i * stride);
    os << "\n";
  }
}

}  // namespace hypar

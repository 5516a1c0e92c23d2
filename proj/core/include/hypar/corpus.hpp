#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypar/field.hpp"

namespace hypar {

enum class CorpusFamily { random_slope, bump, pure_mode };

const char* family_name(CorpusFamily f);

// Seeded test fields. Every member is band-limited at K_c = 3N/16 wavenumbers
// of the grid it was generated on, so resampling to a finer grid gives the same function.
struct Corpus {
  GridSpec grid;
  std::uint64_t seed = 0;
  int band = 0;  // K_c in integer wavenumbers
  std::vector<Field> fields;
  std::vector<CorpusFamily> family;
  std::vector<std::string> labels;

  std::size_t size() const { return fields.size(); }
  Corpus at_resolution(int N) const;
  Corpus scaled(double lambda) const;
  Corpus subset(CorpusFamily f) const;
};

struct CorpusOptions {
  int per_family = 20;
  double amplitude = 1.0;  // sup norm of every member
};

Corpus make_corpus(const GridSpec& g, std::uint64_t seed, const CorpusOptions& opt = {});

// Fraction of L2 energy in the last annulus touching the grid.
double top_annulus_energy(const Field& u);

// Multi-component members built by cycling through the corpus.
std::vector<Field> vector_members(const Corpus& c, int ncomp);

}  // namespace hypar

#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "rorbk/system.hpp"

namespace rorbk {

enum class GeneratorKind {
  randn,  // entries ~ N(0, 1)
  onepr,  // entries ~ U(1, 2), "one plus rand"
};

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::randn;
  Index rows = 0;
  Index cols = 0;

  /// "gen:randn:MxN" or "gen:onepr:MxN". Throws std::invalid_argument.
  static GeneratorSpec parse(const std::string& text);
  std::string to_string() const;
};

bool is_generator_source(const std::string& source);

/// Dense matrix drawn from the spec; deterministic per seed.
DenseMatrix generate_matrix(const GeneratorSpec& spec, std::uint64_t seed);

/// x_star ~ N(0, 1) entrywise and b = A x_star, so the system is consistent.
LinearSystem synthetic_system(std::shared_ptr<const MatrixHandle> a, std::string name,
                              std::uint64_t seed);

/// A from generate_matrix and b from synthetic_system, with seeds derived from `seed`.
LinearSystem generate_system(const GeneratorSpec& spec, std::uint64_t seed);

/// A generator spec or a Matrix Market path.
std::shared_ptr<const MatrixHandle> load_matrix(const std::string& source, std::uint64_t seed);

}  // namespace rorbk

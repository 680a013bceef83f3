#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rorbk/matrix.hpp"

namespace rorbk {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Valid Matrix Market file whose field or symmetry this reader does not handle.
class UnsupportedFormat : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Coordinate files (real or integer; general, symmetric or skew-symmetric)
/// become CSR, with the off-diagonal entries of symmetric files mirrored.
/// Array files become dense. Duplicate coordinate entries are summed.
MatrixHandle read_matrix_market(const std::filesystem::path& path);
MatrixHandle read_matrix_market(std::istream& in, const std::string& source = "<stream>");

/// Sparse matrices are written as coordinate general, dense ones as array
/// general, with 17 significant digits so that a read gives back the same bits.
void write_matrix_market(const std::filesystem::path& path, const MatrixHandle& a);
void write_matrix_market(std::ostream& out, const MatrixHandle& a);

}  // namespace rorbk

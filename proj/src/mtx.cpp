#include "rorbk/mtx.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace rorbk {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

enum class Symmetry { general, symmetric, skew };

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_no_, what); }

  // Next non-comment, non-blank line split into tokens; empty at end of input.
  std::vector<std::string> next_record() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '%' || blank(line)) continue;
      return split(line);
    }
    return {};
  }

  bool header(std::string& line) {
    ++line_no_;
    return static_cast<bool>(std::getline(in_, line));
  }

  Index parse_index(const std::string& tok, const char* what) const {
    Index v = 0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) fail(std::string("bad ") + what + " '" + tok + "'");
    return v;
  }

  double parse_value(const std::string& tok) const {
    double v = 0.0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) fail("bad value '" + tok + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

}  // namespace

MatrixHandle read_matrix_market(std::istream& in, const std::string& source) {
  Reader rd(in, source);
  std::string line;
  if (!rd.header(line)) rd.fail("empty input");
  const auto head = split(line);
  if (head.size() != 5 || head[0] != "%%MatrixMarket")
    rd.fail("expected '%%MatrixMarket <object> <format> <field> <symmetry>'");
  if (lower(head[1]) == "vector") throw UnsupportedFormat("vector objects are not supported");
  if (lower(head[1]) != "matrix") rd.fail("unknown object '" + head[1] + "'");
  const std::string format = lower(head[2]);
  const std::string field = lower(head[3]);
  const std::string sym = lower(head[4]);
  if (format != "coordinate" && format != "array") rd.fail("unknown format '" + head[2] + "'");
  if (field == "complex" || field == "pattern")
    throw UnsupportedFormat("unsupported field type '" + field + "'");
  if (field != "real" && field != "integer" && field != "double")
    rd.fail("unknown field type '" + head[3] + "'");
  Symmetry symmetry;
  if (sym == "general") symmetry = Symmetry::general;
  else if (sym == "symmetric") symmetry = Symmetry::symmetric;
  else if (sym == "skew-symmetric") symmetry = Symmetry::skew;
  else if (sym == "hermitian") throw UnsupportedFormat("hermitian matrices are not supported");
  else rd.fail("unknown symmetry '" + head[4] + "'");

  const auto size = rd.next_record();
  const bool coordinate = format == "coordinate";
  if (size.size() != (coordinate ? 3u : 2u)) rd.fail("malformed size line");
  const Index m = rd.parse_index(size[0], "row count");
  const Index n = rd.parse_index(size[1], "column count");
  if (symmetry != Symmetry::general && m != n) rd.fail("symmetric matrix must be square");

  if (coordinate) {
    const Index nnz = rd.parse_index(size[2], "entry count");
    std::vector<Triplet> entries;
    entries.reserve(symmetry == Symmetry::general ? nnz : 2 * nnz);
    for (Index k = 0; k < nnz; ++k) {
      const auto rec = rd.next_record();
      if (rec.empty()) rd.fail("expected " + std::to_string(nnz) + " entries, found " + std::to_string(k));
      if (rec.size() != 3) rd.fail("entry must be 'row col value'");
      const Index i = rd.parse_index(rec[0], "row index");
      const Index j = rd.parse_index(rec[1], "column index");
      if (i < 1 || i > m || j < 1 || j > n) rd.fail("entry index out of range");
      const double v = rd.parse_value(rec[2]);
      if (symmetry != Symmetry::general && j > i) rd.fail("symmetric file has an upper-triangle entry");
      if (symmetry == Symmetry::skew && i == j) rd.fail("skew-symmetric file has a diagonal entry");
      entries.push_back({i - 1, j - 1, v});
      if (symmetry != Symmetry::general && i != j)
        entries.push_back({j - 1, i - 1, symmetry == Symmetry::skew ? -v : v});
    }
    if (!rd.next_record().empty()) rd.fail("trailing data after the last entry");
    return MatrixHandle(SparseMatrix::from_triplets(m, n, std::move(entries)));
  }

  // Array data is column-major; symmetric variants store the lower triangle only.
  DenseMatrix d(m, n);
  auto read_one = [&]() {
    const auto rec = rd.next_record();
    if (rec.empty()) rd.fail("array data ends early");
    if (rec.size() != 1) rd.fail("array entries must be one value per line");
    return rd.parse_value(rec[0]);
  };
  for (Index j = 0; j < n; ++j) {
    const Index first = symmetry == Symmetry::general ? 0 : (symmetry == Symmetry::skew ? j + 1 : j);
    for (Index i = first; i < m; ++i) {
      const double v = read_one();
      d(i, j) = v;
      if (symmetry != Symmetry::general && i != j) d(j, i) = symmetry == Symmetry::skew ? -v : v;
    }
  }
  if (!rd.next_record().empty()) rd.fail("trailing data after the last entry");
  return MatrixHandle(std::move(d));
}

MatrixHandle read_matrix_market(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_matrix_market(in, path.string());
}

void write_matrix_market(std::ostream& out, const MatrixHandle& a) {
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  if (a.is_sparse()) {
    const SparseMatrix& s = a.sparse();
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << s.rows() << ' ' << s.cols() << ' ' << s.nnz() << '\n';
    for (Index i = 0; i < s.rows(); ++i) {
      const auto cols = s.row_cols(i);
      const auto vals = s.row_values(i);
      for (Index p = 0; p < cols.size(); ++p) out << i + 1 << ' ' << cols[p] + 1 << ' ' << fmt(vals[p]) << '\n';
    }
  } else {
    const DenseMatrix& d = a.dense();
    out << "%%MatrixMarket matrix array real general\n";
    out << d.rows() << ' ' << d.cols() << '\n';
    for (Index j = 0; j < d.cols(); ++j)
      for (Index i = 0; i < d.rows(); ++i) out << fmt(d(i, j)) << '\n';
  }
  if (!out) throw std::runtime_error("write_matrix_market: write failed");
}

void write_matrix_market(const std::filesystem::path& path, const MatrixHandle& a) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_matrix_market(out, a);
}

}  // namespace rorbk

#include "rorbk/generate.hpp"

#include <charconv>
#include <stdexcept>

#include "rorbk/mtx.hpp"
#include "rorbk/rng.hpp"

namespace rorbk {

namespace {

constexpr std::string_view kPrefix = "gen:";

Index parse_dim(std::string_view s, const std::string& text) {
  Index v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v == 0)
    throw std::invalid_argument("generator spec '" + text + "': dimensions must be positive integers");
  return v;
}

}  // namespace

bool is_generator_source(const std::string& source) { return source.starts_with(kPrefix); }

GeneratorSpec GeneratorSpec::parse(const std::string& text) {
  if (!is_generator_source(text))
    throw std::invalid_argument("generator spec '" + text + "' must start with 'gen:'");
  std::string_view rest(text);
  rest.remove_prefix(kPrefix.size());
  const auto colon = rest.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("generator spec '" + text + "': expected gen:<kind>:MxN");
  const auto kind = rest.substr(0, colon);
  const auto dims = rest.substr(colon + 1);
  GeneratorSpec spec;
  if (kind == "randn")
    spec.kind = GeneratorKind::randn;
  else if (kind == "onepr" || kind == "one-plus-rand")
    spec.kind = GeneratorKind::onepr;
  else
    throw std::invalid_argument("generator spec '" + text + "': unknown kind (randn | onepr)");
  const auto x = dims.find_first_of("xX");
  if (x == std::string_view::npos)
    throw std::invalid_argument("generator spec '" + text + "': expected MxN");
  spec.rows = parse_dim(dims.substr(0, x), text);
  spec.cols = parse_dim(dims.substr(x + 1), text);
  return spec;
}

std::string GeneratorSpec::to_string() const {
  return std::string(kPrefix) + (kind == GeneratorKind::randn ? "randn:" : "onepr:") +
         std::to_string(rows) + "x" + std::to_string(cols);
}

DenseMatrix generate_matrix(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.rows == 0 || spec.cols == 0) throw std::invalid_argument("generate_matrix: empty dimensions");
  Rng rng(seed);
  DenseMatrix a(spec.rows, spec.cols);
  for (double& v : a.data()) v = spec.kind == GeneratorKind::randn ? rng.normal() : 1.0 + rng.uniform();
  return a;
}

LinearSystem synthetic_system(std::shared_ptr<const MatrixHandle> a, std::string name,
                              std::uint64_t seed) {
  if (!a) throw std::invalid_argument("synthetic_system: no matrix");
  Rng rng(seed);
  Vector x_star(a->cols());
  for (double& v : x_star) v = rng.normal();
  Vector b = matvec(*a, x_star);
  LinearSystem sys{std::move(a), std::move(b), std::move(x_star), std::move(name)};
  sys.validate();
  return sys;
}

LinearSystem generate_system(const GeneratorSpec& spec, std::uint64_t seed) {
  auto a = std::make_shared<const MatrixHandle>(generate_matrix(spec, Rng::derive_seed(seed, 0)));
  return synthetic_system(std::move(a), spec.to_string(), Rng::derive_seed(seed, 1));
}

std::shared_ptr<const MatrixHandle> load_matrix(const std::string& source, std::uint64_t seed) {
  if (is_generator_source(source))
    return std::make_shared<const MatrixHandle>(generate_matrix(GeneratorSpec::parse(source), seed));
  return std::make_shared<const MatrixHandle>(read_matrix_market(source));
}

}  // namespace rorbk

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rorbk {

using Index = std::size_t;
using Vector = std::vector<double>;

// Error types. Everything derives from the std hierarchy so callers that only
// care about "bad input" vs "numerical failure" can catch the base class.

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by factor_block when a lambda == 0 gram matrix is singular.
class RankDeficientBlock : public std::runtime_error {
 public:
  explicit RankDeficientBlock(const std::string& what)
      : std::runtime_error(what + " (use lambda > 0 for rank-deficient blocks)") {}
};

class DivergenceDetected : public std::runtime_error {
 public:
  DivergenceDetected(const std::string& method, Index iteration)
      : std::runtime_error(method + ": non-finite iterate at outer iteration " +
                           std::to_string(iteration)),
        iteration_(iteration) {}
  Index iteration() const noexcept { return iteration_; }

 private:
  Index iteration_;
};

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

// Small dense vector helpers used throughout the solvers.

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (Index i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (Index i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(std::span<const double> a) {
  for (double v : a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  Vector out(a.size());
  for (Index i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

}  // namespace rorbk

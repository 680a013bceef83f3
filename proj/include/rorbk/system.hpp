#pragma once

#include <memory>
#include <optional>
#include <string>

#include "rorbk/matrix.hpp"

namespace rorbk {

/// Ax = b with an optional reference solution. The matrix is shared and
/// immutable so that many right-hand sides can reuse one A.
struct LinearSystem {
  std::shared_ptr<const MatrixHandle> matrix;
  Vector b;
  std::optional<Vector> x_star;
  std::string name;

  const MatrixHandle& A() const { return *matrix; }
  Index rows() const { return matrix->rows(); }
  Index cols() const { return matrix->cols(); }
  double density() const { return matrix->density(); }

  void validate() const {
    if (!matrix) throw std::invalid_argument("LinearSystem: no matrix");
    require_dims(b.size() == matrix->rows(), "LinearSystem: b.size() != A.rows()");
    if (x_star) require_dims(x_star->size() == matrix->cols(), "LinearSystem: x_star.size() != A.cols()");
  }
};

inline LinearSystem make_system(MatrixHandle a, Vector b, std::optional<Vector> x_star = {},
                                std::string name = {}) {
  LinearSystem sys{std::make_shared<const MatrixHandle>(std::move(a)), std::move(b),
                   std::move(x_star), std::move(name)};
  sys.validate();
  return sys;
}

}  // namespace rorbk

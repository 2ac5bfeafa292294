#pragma once

#include "cvxnn/model.hpp"

#include <memory>
#include <vector>

namespace cvxnn::detail {

/// Sparse Cholesky of A*A' + reg*I for a fixed column-compressed pattern of A
/// (rows = variables, columns = scaled constraint rows). The symbolic analysis runs
/// once; each factorize() call refreshes the numeric values only.
class NormalEquations {
 public:
  NormalEquations(Index rows, Index cols, std::vector<int> col_ptr, std::vector<int> row_index);
  ~NormalEquations();
  NormalEquations(const NormalEquations&) = delete;
  NormalEquations& operator=(const NormalEquations&) = delete;

  /// Values of A in pattern order; write these before factorize().
  double* values();
  std::size_t nnz() const;

  /// Returns false when the matrix is not numerically positive definite.
  bool factorize(double reg);
  /// Solves (A*A' + reg*I) x = rhs in place.
  void solve(Vector& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cvxnn::detail

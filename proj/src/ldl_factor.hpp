#pragma once

#include "cvxnn/model.hpp"

#include <memory>
#include <vector>

namespace cvxnn::detail {

/// Sparse LDL' of a symmetric quasi-definite matrix given by its upper triangle in
/// compressed-column form. No pivoting: the static regularization in the matrix
/// itself keeps every pivot away from zero. Symbolic analysis runs once.
class LdlFactor {
 public:
  LdlFactor(Index n, std::vector<int> col_ptr, std::vector<int> row_index);
  ~LdlFactor();
  LdlFactor(const LdlFactor&) = delete;
  LdlFactor& operator=(const LdlFactor&) = delete;

  double* values();
  bool factorize();
  void solve(Vector& rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cvxnn::detail

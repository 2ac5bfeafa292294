#include "normal_equations.hpp"

#include <cholmod.h>

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace cvxnn::detail {

struct NormalEquations::Impl {
  cholmod_common common{};
  cholmod_sparse* a = nullptr;
  cholmod_factor* factor = nullptr;
  Index rows = 0;

  Impl() {
    cholmod_start(&common);
    common.print = 0;
    common.error_handler = nullptr;
    // Keep going on a non-positive pivot so the caller can retry with more regularization.
    common.quick_return_if_not_posdef = 1;
    // The supernodal path depends on the system BLAS, and some OpenBLAS builds
    // misdetect newer CPUs and return broken factors.
    common.supernodal = CHOLMOD_SIMPLICIAL;
  }
  ~Impl() {
    if (factor) cholmod_free_factor(&factor, &common);
    if (a) cholmod_free_sparse(&a, &common);
    cholmod_finish(&common);
  }
};

NormalEquations::NormalEquations(Index rows, Index cols, std::vector<int> col_ptr,
                                 std::vector<int> row_index)
    : impl_(std::make_unique<Impl>()) {
  impl_->rows = rows;
  const auto nnz = static_cast<std::size_t>(col_ptr.back());
  impl_->a = cholmod_allocate_sparse(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols),
                                     nnz, /*sorted=*/1, /*packed=*/1, /*stype=*/0, CHOLMOD_REAL,
                                     &impl_->common);
  if (!impl_->a) throw std::runtime_error("cholmod: allocation failed");
  std::memcpy(impl_->a->p, col_ptr.data(), col_ptr.size() * sizeof(int));
  std::memcpy(impl_->a->i, row_index.data(), row_index.size() * sizeof(int));
  std::fill_n(static_cast<double*>(impl_->a->x), nnz, 1.0);
  impl_->factor = cholmod_analyze(impl_->a, &impl_->common);
  if (!impl_->factor) throw std::runtime_error("cholmod: symbolic analysis failed");
}

NormalEquations::~NormalEquations() = default;

double* NormalEquations::values() { return static_cast<double*>(impl_->a->x); }

std::size_t NormalEquations::nnz() const { return impl_->a->nzmax; }

bool NormalEquations::factorize(double reg) {
  double beta[2] = {reg, 0.0};
  impl_->common.status = CHOLMOD_OK;
  cholmod_factorize_p(impl_->a, beta, nullptr, 0, impl_->factor, &impl_->common);
  // Warnings such as CHOLMOD_DSMALL still leave a complete factor; refinement absorbs them.
  return impl_->common.status >= CHOLMOD_OK && impl_->factor->minor == impl_->factor->n;
}

void NormalEquations::solve(Vector& rhs) const {
  cholmod_dense b{};
  b.nrow = static_cast<std::size_t>(impl_->rows);
  b.ncol = 1;
  b.nzmax = b.nrow;
  b.d = b.nrow;
  b.x = rhs.data();
  b.xtype = CHOLMOD_REAL;
  b.dtype = CHOLMOD_DOUBLE;
  cholmod_dense* x = cholmod_solve(CHOLMOD_A, impl_->factor, &b, &impl_->common);
  if (!x) throw std::runtime_error("cholmod: solve failed");
  std::memcpy(rhs.data(), x->x, b.nrow * sizeof(double));
  cholmod_free_dense(&x, &impl_->common);
}

}  // namespace cvxnn::detail

#include "ldl_factor.hpp"

#include <cholmod.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cvxnn::detail {

struct LdlFactor::Impl {
  cholmod_common common{};
  cholmod_sparse* a = nullptr;
  cholmod_factor* factor = nullptr;
  Index n = 0;

  Impl() {
    cholmod_start(&common);
    common.print = 0;
    common.error_handler = nullptr;
    common.supernodal = CHOLMOD_SIMPLICIAL;
    common.final_ll = 0;
  }
  ~Impl() {
    if (factor) cholmod_free_factor(&factor, &common);
    if (a) cholmod_free_sparse(&a, &common);
    cholmod_finish(&common);
  }
};

LdlFactor::LdlFactor(Index n, std::vector<int> col_ptr, std::vector<int> row_index)
    : impl_(std::make_unique<Impl>()) {
  impl_->n = n;
  const auto nnz = static_cast<std::size_t>(col_ptr.back());
  const auto dim = static_cast<std::size_t>(n);
  impl_->a = cholmod_allocate_sparse(dim, dim, nnz, /*sorted=*/1, /*packed=*/1, /*stype=*/1, CHOLMOD_REAL,
                                     &impl_->common);
  if (!impl_->a) throw std::runtime_error("cholmod: allocation failed");
  std::memcpy(impl_->a->p, col_ptr.data(), col_ptr.size() * sizeof(int));
  std::memcpy(impl_->a->i, row_index.data(), row_index.size() * sizeof(int));
  std::fill_n(static_cast<double*>(impl_->a->x), nnz, 0.0);
  impl_->factor = cholmod_analyze(impl_->a, &impl_->common);
  if (!impl_->factor) throw std::runtime_error("cholmod: symbolic analysis failed");
}

LdlFactor::~LdlFactor() = default;

double* LdlFactor::values() { return static_cast<double*>(impl_->a->x); }

bool LdlFactor::factorize() {
  impl_->common.status = CHOLMOD_OK;
  cholmod_factorize(impl_->a, impl_->factor, &impl_->common);
  if (impl_->common.status < CHOLMOD_OK || impl_->factor->minor != impl_->factor->n) return false;
  // A tiny pivot does not stop CHOLMOD's LDL' but makes the solve useless.
  const auto* p = static_cast<const int*>(impl_->factor->p);
  const auto* x = static_cast<const double*>(impl_->factor->x);
  for (std::size_t j = 0; j < impl_->factor->n; ++j) {
    const double d = x[p[j]];
    if (!std::isfinite(d) || std::abs(d) < 1e-300) return false;
  }
  return true;
}

void LdlFactor::solve(Vector& rhs) const {
  cholmod_dense b{};
  b.nrow = static_cast<std::size_t>(impl_->n);
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

// Operator-splitting fallback: ADMM on  min c'x  s.t.  Gx + s = h, s in K.
// The data are Ruiz-equilibrated first (row scales constant on each cone block), then
// one sparse factorization of (sigma I + rho G'G) is made per rho value; rho adapts
// by residual balancing. Termination is judged on the unscaled residuals.

#include "cvxnn/solver.hpp"

#include "normal_equations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cvxnn {

namespace {

struct Cones {
  Index lp;
  std::vector<SocBlock> soc;  // offsets into the stacked row vector
};

void project(const Cones& cones, Vector& v) {
  v.head(cones.lp) = v.head(cones.lp).cwiseMax(0.0);
  for (const auto& b : cones.soc) {
    auto block = v.segment(b.first_row, b.size);
    const double t = block(0);
    const double norm = block.tail(b.size - 1).norm();
    if (norm <= t) continue;
    if (norm <= -t) {
      block.setZero();
      continue;
    }
    const double scale = (t + norm) / 2.0;
    block.tail(b.size - 1) *= scale / norm;
    block(0) = scale;
  }
}

// Row scales d and column scales e with D G E close to unit max-norm rows and
// columns. A cone block shares one row scale so D maps the cone onto itself.
void equilibrate(const SparseMatrix& g, const Cones& cones, Vector& d, Vector& e) {
  const Index m = g.rows(), n = g.cols();
  d = Vector::Ones(m);
  e = Vector::Ones(n);
  SparseMatrix work = g;
  for (int pass = 0; pass < 25; ++pass) {
    Vector row_max = Vector::Zero(m), col_max = Vector::Zero(n);
    for (Index j = 0; j < work.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(work, j); it; ++it) {
        const double a = std::abs(it.value());
        row_max(it.row()) = std::max(row_max(it.row()), a);
        col_max(j) = std::max(col_max(j), a);
      }
    }
    for (const auto& b : cones.soc) row_max.segment(b.first_row, b.size).setConstant(row_max.segment(b.first_row, b.size).maxCoeff());
    auto factor = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
    const Vector dr = row_max.unaryExpr(factor), ec = col_max.unaryExpr(factor);
    if ((dr.array() - 1.0).abs().maxCoeff() < 1e-3 && (ec.array() - 1.0).abs().maxCoeff() < 1e-3) break;
    d = (d.cwiseProduct(dr)).cwiseMax(1e-4).cwiseMin(1e4);
    e = (e.cwiseProduct(ec)).cwiseMax(1e-4).cwiseMin(1e4);
    work = d.asDiagonal() * g * e.asDiagonal();
  }
}

}  // namespace

SolveResult solve_operator_splitting(const ConicProgram& program, const SolveSettings& settings) {
  const Index l = program.nonneg_rows();
  const Index nvar = program.var_count();
  Cones cones{l, program.soc_blocks()};
  for (auto& b : cones.soc) b.first_row += l;

  std::vector<Eigen::Triplet<double>> triplets;
  for (Index j = 0; j < program.nonneg_matrix().outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(program.nonneg_matrix(), j); it; ++it) {
      triplets.emplace_back(it.row(), it.col(), -it.value());
    }
  }
  for (Index j = 0; j < program.soc_matrix().outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(program.soc_matrix(), j); it; ++it) {
      triplets.emplace_back(l + it.row(), it.col(), -it.value());
    }
  }
  const Index m = l + program.soc_rows();
  SparseMatrix g_raw(m, nvar);
  g_raw.setFromTriplets(triplets.begin(), triplets.end());
  g_raw.makeCompressed();
  const SparseMatrix gt_raw = g_raw.transpose();
  Vector h_raw(m);
  h_raw << program.nonneg_offset(), program.soc_offset();
  const Vector& c_raw = program.objective();

  Vector d, e;
  equilibrate(g_raw, cones, d, e);
  const double cost_scale = 1.0 / std::clamp(e.cwiseProduct(c_raw).lpNorm<Eigen::Infinity>(), 1e-4, 1e4);
  SparseMatrix g = d.asDiagonal() * g_raw * e.asDiagonal();
  g.makeCompressed();
  const SparseMatrix gt = g.transpose();
  const Vector h = d.cwiseProduct(h_raw);
  const Vector c = cost_scale * e.cwiseProduct(c_raw);

  // A = sqrt(rho) * G' in column-compressed form; same pattern as G' itself.
  const SparseMatrix pattern = gt;
  std::vector<int> col_ptr(pattern.outerIndexPtr(), pattern.outerIndexPtr() + m + 1);
  std::vector<int> row_index(pattern.innerIndexPtr(), pattern.innerIndexPtr() + pattern.nonZeros());
  detail::NormalEquations factor(nvar, m, col_ptr, row_index);

  constexpr double sigma = 1e-6;
  constexpr double relax = 1.6;
  double rho = 0.1;
  auto refactor = [&]() {
    const double root = std::sqrt(rho);
    double* values = factor.values();
    for (Index k = 0; k < pattern.nonZeros(); ++k) values[k] = root * pattern.valuePtr()[k];
    return factor.factorize(sigma);
  };

  Vector x = Vector::Zero(nvar);
  Vector s = Vector::Zero(m);
  Vector u = Vector::Zero(m);
  SolveResult result;
  result.status = SolveStatus::max_iter;
  if (m > 0 && !refactor()) {
    result.primal = x;
    result.dual = u;
    return result;
  }

  const double hnorm = h_raw.lpNorm<Eigen::Infinity>();
  const double cnorm = c_raw.lpNorm<Eigen::Infinity>();
  int iter = 0;
  int next_adapt = 50;
  for (; iter < settings.max_iter; ++iter) {
    if (m == 0) break;
    Vector rhs = sigma * x - c - rho * (gt * (s - h + u));
    factor.solve(rhs);
    x = rhs;
    const Vector gx = g * x;
    const Vector relaxed = relax * gx + (1.0 - relax) * (h - s);
    Vector s_new = h - relaxed - u;
    project(cones, s_new);
    u += relaxed + s_new - h;
    s = std::move(s_new);

    if (iter % 10 == 0 || iter + 1 == settings.max_iter) {
      const Vector xo = e.cwiseProduct(x);
      const Vector so = s.cwiseQuotient(d);
      const Vector zo = (rho / cost_scale) * d.cwiseProduct(u);
      const Vector gxo = g_raw * xo;
      const Vector gtz = gt_raw * zo;
      const double pres = (gxo + so - h_raw).lpNorm<Eigen::Infinity>();
      const double dres = (c_raw + gtz).lpNorm<Eigen::Infinity>();
      const double pscale = 1.0 + std::max({gxo.lpNorm<Eigen::Infinity>(), so.lpNorm<Eigen::Infinity>(), hnorm});
      const double dscale = 1.0 + std::max(gtz.lpNorm<Eigen::Infinity>(), cnorm);
      const double pcost = c_raw.dot(xo);
      const double dcost = -h_raw.dot(zo);
      const double gap = std::abs(pcost - dcost) / (1.0 + std::abs(pcost));
      if (settings.verbose && iter % 500 == 0) {
        std::fprintf(stderr, "admm %6d pcost % .9e gap %.2e pres %.2e dres %.2e rho %.2e\n", iter, pcost,
                     gap, pres / pscale, dres / dscale, rho);
      }
      if (pres <= settings.tol_feas * pscale && dres <= settings.tol_feas * dscale &&
          gap <= settings.tol_gap) {
        const PointCheck check = check_point(program, xo);
        if (check.max_violation <= settings.tol_feas) {
          result.status = SolveStatus::optimal;
          result.gap = gap;
          break;
        }
      }
      result.gap = gap;
      // Adaptation points double in spacing so rho settles and the iterates can converge.
      if (iter > 0 && iter == next_adapt) {
        next_adapt *= 2;
        const double ratio = std::sqrt((pres / pscale) / std::max(dres / dscale, 1e-300));
        const double next = std::clamp(rho * ratio, 1e-6, 1e6);
        if (next > 5.0 * rho || next < 0.2 * rho) {
          u *= rho / next;
          rho = next;
          if (!refactor()) break;
        }
      }
    }
  }
  result.primal = e.cwiseProduct(x);
  result.dual = (rho / cost_scale) * d.cwiseProduct(u);
  result.iterations = iter;
  const PointCheck check = check_point(program, result.primal);
  result.objective = check.objective;
  result.max_violation = check.max_violation;
  return result;
}

}  // namespace cvxnn

#include "cvxnn/solver.hpp"

#include "ldl_factor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

namespace cvxnn {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
  }
  return "unknown";
}

void SolveSettings::validate() const {
  if (!(tol_gap > 0.0) || !(tol_feas > 0.0)) throw InvalidArgument("solver tolerances must be > 0");
  if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (!(static_regularization >= 0.0)) throw InvalidArgument("regularization must be >= 0");
}

PointCheck check_point(const ConicProgram& program, const Vector& point) {
  if (point.size() != program.var_count()) throw DimensionError("point length differs from var_count");
  PointCheck out;
  out.objective = program.objective_value(point);
  if (program.nonneg_rows() > 0) {
    const Vector rows = program.nonneg_matrix() * point + program.nonneg_offset();
    out.max_violation = std::max(0.0, -rows.minCoeff());
  }
  if (program.soc_rows() > 0) {
    const Vector rows = program.soc_matrix() * point + program.soc_offset();
    for (const auto& block : program.soc_blocks()) {
      const double bound = rows(block.first_row);
      const double norm = rows.segment(block.first_row + 1, block.size - 1).norm();
      out.max_violation = std::max(out.max_violation, norm - bound);
    }
  }
  return out;
}

namespace detail {

/// Product cone R^l_+ x Q^{q_1} x ... x Q^{q_k} with the vector algebra the
/// interior-point iteration needs (Jordan products, NT scalings, step lengths).
class ConeSet {
 public:
  ConeSet(Index lp, std::vector<SocBlock> soc) : lp_(lp), soc_(std::move(soc)) {
    dim_ = lp_;
    for (auto& b : soc_) {
      b.first_row += lp_;
      dim_ += b.size;
    }
  }

  Index dim() const { return dim_; }
  Index lp() const { return lp_; }
  const std::vector<SocBlock>& soc() const { return soc_; }
  double degree() const { return static_cast<double>(lp_ + static_cast<Index>(soc_.size())); }

  Vector identity() const {
    Vector e = Vector::Zero(dim_);
    e.head(lp_).setOnes();
    for (const auto& b : soc_) e(b.first_row) = 1.0;
    return e;
  }

  /// Smallest "eigenvalue": min over cones of s_i (orthant) or s0 - ||s1|| (soc).
  double min_eigenvalue(const Vector& s) const {
    double m = std::numeric_limits<double>::infinity();
    if (lp_ > 0) m = s.head(lp_).minCoeff();
    for (const auto& b : soc_) {
      m = std::min(m, s(b.first_row) - s.segment(b.first_row + 1, b.size - 1).norm());
    }
    return m;
  }

  Vector circ(const Vector& u, const Vector& v) const {
    Vector out(dim_);
    out.head(lp_) = u.head(lp_).cwiseProduct(v.head(lp_));
    for (const auto& b : soc_) {
      const auto u1 = u.segment(b.first_row + 1, b.size - 1);
      const auto v1 = v.segment(b.first_row + 1, b.size - 1);
      out(b.first_row) = u.segment(b.first_row, b.size).dot(v.segment(b.first_row, b.size));
      out.segment(b.first_row + 1, b.size - 1) = u(b.first_row) * v1 + v(b.first_row) * u1;
    }
    return out;
  }

  /// x such that lambda o x = v.
  Vector inv_circ(const Vector& lambda, const Vector& v) const {
    Vector out(dim_);
    out.head(lp_) = v.head(lp_).cwiseQuotient(lambda.head(lp_));
    for (const auto& b : soc_) {
      const double l0 = lambda(b.first_row);
      const auto l1 = lambda.segment(b.first_row + 1, b.size - 1);
      const auto v1 = v.segment(b.first_row + 1, b.size - 1);
      const double det = l0 * l0 - l1.squaredNorm();
      const double x0 = (l0 * v(b.first_row) - l1.dot(v1)) / det;
      out(b.first_row) = x0;
      out.segment(b.first_row + 1, b.size - 1) = (v1 - x0 * l1) / l0;
    }
    return out;
  }

  /// Largest alpha with s + alpha*ds in the cone (infinity when unbounded).
  double max_step(const Vector& s, const Vector& ds) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (Index r = 0; r < lp_; ++r) {
      if (ds(r) < 0.0) alpha = std::min(alpha, -s(r) / ds(r));
    }
    for (const auto& b : soc_) {
      const double s0 = s(b.first_row), d0 = ds(b.first_row);
      const auto s1 = s.segment(b.first_row + 1, b.size - 1);
      const auto d1 = ds.segment(b.first_row + 1, b.size - 1);
      const double qa = d0 * d0 - d1.squaredNorm();
      const double qb = s0 * d0 - s1.dot(d1);
      const double qc = std::max(0.0, s0 * s0 - s1.squaredNorm());
      alpha = std::min(alpha, smallest_positive_root(qa, qb, qc));
    }
    return alpha;
  }

 private:
  // Smallest positive root of qa*t^2 + 2*qb*t + qc with qc >= 0.
  static double smallest_positive_root(double qa, double qb, double qc) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (qa == 0.0) return qb < 0.0 ? -qc / (2.0 * qb) : inf;
    const double disc = qb * qb - qa * qc;
    if (disc < 0.0) return inf;
    const double q = -(qb + std::copysign(std::sqrt(disc), qb));
    double best = inf;
    if (q != 0.0) {
      const double r1 = q / qa;
      const double r2 = qc / q;
      if (r1 > 0.0) best = std::min(best, r1);
      if (r2 > 0.0) best = std::min(best, r2);
    } else if (qc == 0.0) {
      best = 0.0;
    }
    return best;
  }

  Index lp_;
  std::vector<SocBlock> soc_;
  Index dim_ = 0;
};

/// Nesterov-Todd scaling W for a pair (s, z) in the interior: W z = W^{-1} s = lambda.
struct Scaling {
  Vector lp_w;                    // sqrt(s/z) per orthant row
  std::vector<double> eta;        // per soc block
  std::vector<Vector> wbar;       // per soc block, J-unit vector
  Vector lambda;

  void compute(const ConeSet& cones, const Vector& s, const Vector& z) {
    const Index lp = cones.lp();
    lp_w = (s.head(lp).array() / z.head(lp).array()).sqrt();
    eta.resize(cones.soc().size());
    wbar.resize(cones.soc().size());
    for (std::size_t k = 0; k < cones.soc().size(); ++k) {
      const auto& b = cones.soc()[k];
      const auto sb = s.segment(b.first_row, b.size);
      const auto zb = z.segment(b.first_row, b.size);
      const double sres = std::max(sb(0) * sb(0) - sb.tail(b.size - 1).squaredNorm(), 1e-300);
      const double zres = std::max(zb(0) * zb(0) - zb.tail(b.size - 1).squaredNorm(), 1e-300);
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      const Vector sbar = sb / snorm;
      const Vector zbar = zb / znorm;
      const double gamma = std::sqrt(std::max((1.0 + sbar.dot(zbar)) / 2.0, 1e-300));
      Vector w(b.size);
      w(0) = (sbar(0) + zbar(0)) / (2.0 * gamma);
      w.tail(b.size - 1) = (sbar.tail(b.size - 1) - zbar.tail(b.size - 1)) / (2.0 * gamma);
      wbar[k] = std::move(w);
      eta[k] = std::sqrt(snorm / znorm);
    }
    lambda = apply(cones, z, false);
  }

  /// W x (inverse=false) or W^{-1} x (inverse=true).
  Vector apply(const ConeSet& cones, const Vector& x, bool inverse) const {
    Vector out(x.size());
    const Index lp = cones.lp();
    if (inverse) {
      out.head(lp) = x.head(lp).cwiseQuotient(lp_w);
    } else {
      out.head(lp) = x.head(lp).cwiseProduct(lp_w);
    }
    for (std::size_t k = 0; k < cones.soc().size(); ++k) {
      const auto& b = cones.soc()[k];
      const Vector& w = wbar[k];
      const auto w1 = w.tail(b.size - 1);
      const double x0 = x(b.first_row);
      const auto x1 = x.segment(b.first_row + 1, b.size - 1);
      const double sign = inverse ? -1.0 : 1.0;
      const double scale = inverse ? 1.0 / eta[k] : eta[k];
      const double w1x1 = w1.dot(x1);
      out(b.first_row) = scale * (w(0) * x0 + sign * w1x1);
      out.segment(b.first_row + 1, b.size - 1) =
          scale * (x1 + (sign * x0 + w1x1 / (1.0 + w(0))) * w1);
    }
    return out;
  }
};

/// Solves [0 G'; G -W'W] [dx; dz] = [bx; bz] through the quasi-definite system
/// [reg I, G'; G, -(W'W + reg I)], with iterative refinement against the exact one.
/// Keeping z in the system avoids the dense G' W^{-2} G a shared loss row creates.
class KktSystem {
 public:
  KktSystem(const SparseMatrix& g, const ConeSet& cones, double regularization)
      : g_(g), gt_(g.transpose()), cones_(cones), reg_(regularization) {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> rows = g;
    const Index n = g.cols();
    const Index m = g.rows();
    std::vector<int> col_ptr(static_cast<std::size_t>(n + m) + 1, 0);
    std::vector<int> row_index;
    std::vector<double> fixed;
    for (Index j = 0; j < n; ++j) {
      row_index.push_back(static_cast<int>(j));
      fixed.push_back(0.0);
      diag_x_.push_back(row_index.size() - 1);
      col_ptr[static_cast<std::size_t>(j) + 1] = static_cast<int>(row_index.size());
    }
    // Column n + r: G(r, :) above the diagonal, then the W'W entries of r's cone.
    std::vector<Index> block_of(static_cast<std::size_t>(m), -1);
    for (std::size_t k = 0; k < cones.soc().size(); ++k) {
      const auto& b = cones.soc()[k];
      for (Index r = b.first_row; r < b.first_row + b.size; ++r) block_of[static_cast<std::size_t>(r)] = static_cast<Index>(k);
    }
    soc_pos_.resize(cones.soc().size());
    for (Index r = 0; r < m; ++r) {
      for (decltype(rows)::InnerIterator it(rows, r); it; ++it) {
        row_index.push_back(static_cast<int>(it.col()));
        fixed.push_back(it.value());
      }
      const Index k = block_of[static_cast<std::size_t>(r)];
      if (k < 0) {
        row_index.push_back(static_cast<int>(n + r));
        fixed.push_back(0.0);
        lp_pos_.push_back(row_index.size() - 1);
      } else {
        const auto& b = cones.soc()[static_cast<std::size_t>(k)];
        for (Index q = b.first_row; q <= r; ++q) {
          row_index.push_back(static_cast<int>(n + q));
          fixed.push_back(0.0);
          soc_pos_[static_cast<std::size_t>(k)].push_back(row_index.size() - 1);
        }
      }
      col_ptr[static_cast<std::size_t>(n + r) + 1] = static_cast<int>(row_index.size());
    }
    factor_ = std::make_unique<LdlFactor>(n + m, std::move(col_ptr), std::move(row_index));
    std::copy(fixed.begin(), fixed.end(), factor_->values());
  }

  /// Refreshes the numeric factor for scaling `w`. Returns false if factorization
  /// failed even after escalating the regularization.
  bool factorize(const Scaling& w) {
    scaling_ = &w;
    double reg = reg_;
    for (int attempt = 0; attempt < 8; ++attempt) {
      fill(w, reg);
      if (factor_->factorize()) return true;
      reg = std::max(reg * 100.0, 1e-12);
    }
    return false;
  }

  void solve(const Vector& bx, const Vector& bz, Vector& dx, Vector& dz, int refinements = 5) const {
    solve_once(bx, bz, dx, dz);
    double last = std::numeric_limits<double>::infinity();
    for (int k = 0; k < refinements; ++k) {
      const Vector ex = bx - gt_ * dz;
      const Vector ez = bz - (g_ * dx - apply_w2(dz));
      const double err = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
      const double scale = 1.0 + std::max(bx.lpNorm<Eigen::Infinity>(), bz.lpNorm<Eigen::Infinity>());
      if (err <= 1e-14 * scale || err >= last) break;
      last = err;
      Vector cx, cz;
      solve_once(ex, ez, cx, cz);
      dx += cx;
      dz += cz;
    }
  }

 private:
  void fill(const Scaling& w, double reg) {
    double* values = factor_->values();
    for (std::size_t p : diag_x_) values[p] = reg;
    for (Index r = 0; r < cones_.lp(); ++r) {
      const double lw = w.lp_w(r);
      values[lp_pos_[static_cast<std::size_t>(r)]] = -(lw * lw + reg);
    }
    for (std::size_t k = 0; k < cones_.soc().size(); ++k) {
      // For the NT point, W'W = eta^2 (2 wbar wbar' - J).
      const Vector& wb = w.wbar[k];
      const double e2 = w.eta[k] * w.eta[k];
      const Index q = wb.size();
      std::size_t pos = 0;
      for (Index c = 0; c < q; ++c) {
        for (Index r = 0; r <= c; ++r) {
          double v = 2.0 * wb(r) * wb(c);
          if (r == c) v += r == 0 ? -1.0 : 1.0;
          values[soc_pos_[k][pos++]] = -(e2 * v + (r == c ? reg : 0.0));
        }
      }
    }
  }

  Vector apply_w2(const Vector& v) const {
    return scaling_->apply(cones_, scaling_->apply(cones_, v, false), false);
  }

  void solve_once(const Vector& bx, const Vector& bz, Vector& dx, Vector& dz) const {
    const Index n = bx.size();
    Vector rhs(n + bz.size());
    rhs << bx, bz;
    factor_->solve(rhs);
    dx = rhs.head(n);
    dz = rhs.tail(bz.size());
  }

  const SparseMatrix& g_;
  SparseMatrix gt_;
  const ConeSet& cones_;
  double reg_;
  std::vector<std::size_t> diag_x_;
  std::vector<std::size_t> lp_pos_;
  std::vector<std::vector<std::size_t>> soc_pos_;
  std::unique_ptr<LdlFactor> factor_;
  const Scaling* scaling_ = nullptr;
};

/// Standard form min c'x s.t. Gx + s = h, s in K, from the program's "row >= 0" form.
struct StandardForm {
  SparseMatrix g;
  Vector h;
  Vector c;
  ConeSet cones;
};

StandardForm standard_form(const ConicProgram& program) {
  const Index l = program.nonneg_rows();
  const Index q = program.soc_rows();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(program.nonneg_matrix().nonZeros() + program.soc_matrix().nonZeros()));
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
  SparseMatrix g(l + q, program.var_count());
  g.setFromTriplets(triplets.begin(), triplets.end());
  g.makeCompressed();
  Vector h(l + q);
  h << program.nonneg_offset(), program.soc_offset();
  return StandardForm{std::move(g), std::move(h), program.objective(),
                      ConeSet(l, program.soc_blocks())};
}

SolveResult finish_result(const ConicProgram& program, const Vector& x, const Vector& z,
                          double gap, int iterations, SolveStatus status) {
  SolveResult result;
  result.primal = x;
  result.dual = z;
  result.iterations = iterations;
  result.gap = gap;
  const PointCheck check = check_point(program, x);
  result.objective = check.objective;
  result.max_violation = check.max_violation;
  result.status = status;
  return result;
}

SolveResult interior_point(const ConicProgram& program, const SolveSettings& settings) {
  const StandardForm form = standard_form(program);
  const ConeSet& cones = form.cones;
  const SparseMatrix& g = form.g;
  const Vector& h = form.h;
  const Vector& c = form.c;
  const Index nvar = g.cols();
  const Index m = g.rows();

  if (m == 0) {
    // Unconstrained linear objective.
    const Vector zero = Vector::Zero(nvar);
    const Vector dual = Vector::Zero(0);
    if (c.lpNorm<Eigen::Infinity>() == 0.0) return finish_result(program, zero, dual, 0.0, 0, SolveStatus::optimal);
    return finish_result(program, zero, dual, 0.0, 0, SolveStatus::unbounded);
  }

  KktSystem kkt(g, cones, settings.static_regularization);
  Scaling scaling;
  const Vector e = cones.identity();

  // Initial point: least-squares primal and minimum-norm dual, shifted into the cone.
  scaling.compute(cones, e, e);
  if (!kkt.factorize(scaling)) {
    return finish_result(program, Vector::Zero(nvar), Vector::Zero(m), 1.0, 0, SolveStatus::max_iter);
  }
  Vector x, s, z, tmp;
  kkt.solve(Vector::Zero(nvar), h, x, tmp);
  s = -tmp;
  {
    const double shift = -cones.min_eigenvalue(s);
    if (shift >= 0.0) s += (1.0 + shift) * e;
  }
  kkt.solve(-c, Vector::Zero(m), tmp, z);
  {
    const double shift = -cones.min_eigenvalue(z);
    if (shift >= 0.0) z += (1.0 + shift) * e;
  }
  double tau = 1.0, kappa = 1.0;

  const double hnorm = std::max(1.0, h.norm());
  const double cnorm = std::max(1.0, c.norm());
  const double nu = cones.degree();
  const int iter_cap = settings.max_iter;

  Vector best_x = x, best_z = z;
  double best_score = std::numeric_limits<double>::infinity();
  double best_gap = 1.0;
  int stalls = 0;
  int since_best = 0;
  int iter = 0;

  for (; iter < iter_cap; ++iter) {
    const Vector rx = g.transpose() * z + c * tau;
    const Vector rz = s + g * x - h * tau;
    const double rtau = kappa + c.dot(x) + h.dot(z);

    const double pcost = c.dot(x) / tau;
    const double dcost = -h.dot(z) / tau;
    const double pres = rz.norm() / tau / hnorm;
    const double dres = rx.norm() / tau / cnorm;
    const double gap_abs = s.dot(z) / (tau * tau);
    const double gap = std::max(gap_abs, std::abs(pcost - dcost)) / (1.0 + std::abs(pcost));

    if (settings.verbose) {
      std::fprintf(stderr, "%3d pcost % .9e dcost % .9e gap %.2e pres %.2e dres %.2e k/t %.2e\n", iter,
                   pcost, dcost, gap, pres, dres, kappa / tau);
    }

    const Vector xhat = x / tau;
    const double score = std::max({pres, dres, gap});
    if (score < 0.5 * best_score || (score < best_score && since_best > 0)) since_best = 0;
    if (score < best_score) {
      best_score = score;
      best_x = xhat;
      best_z = z / tau;
      best_gap = gap;
    } else if (++since_best > 25) {
      break;  // no progress: numerical limit reached
    }
    if (gap <= settings.tol_gap && dres <= settings.tol_feas && pres <= settings.tol_feas) {
      const PointCheck check = check_point(program, xhat);
      if (check.max_violation <= settings.tol_feas) {
        return finish_result(program, xhat, z / tau, gap, iter, SolveStatus::optimal);
      }
    }

    // Certificates of infeasibility, checked once kappa dominates tau.
    const double hz = h.dot(z);
    const double cx = c.dot(x);
    if (kappa > tau || tau < 1e-8 * kappa) {
      if (hz < 0.0 && (g.transpose() * z).norm() / cnorm <= settings.tol_feas * -hz) {
        return finish_result(program, best_x, z, best_gap, iter, SolveStatus::infeasible);
      }
      if (cx < 0.0 && (g * x + s).norm() / hnorm <= settings.tol_feas * -cx) {
        return finish_result(program, best_x, z, best_gap, iter, SolveStatus::unbounded);
      }
      if (tau < 1e-8 * kappa) {
        if (hz < 0.0) return finish_result(program, best_x, z, best_gap, iter, SolveStatus::infeasible);
        if (cx < 0.0) return finish_result(program, best_x, z, best_gap, iter, SolveStatus::unbounded);
      }
    }

    scaling.compute(cones, s, z);
    if (!kkt.factorize(scaling)) break;
    const Vector& lambda = scaling.lambda;
    const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

    Vector x1, z1;
    kkt.solve(-c, h, x1, z1);
    const double denom_base = c.dot(x1) + h.dot(z1);

    struct Direction {
      Vector dx, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto direction = [&](double sigma, const Vector& ds_target, double dkappa_target) {
      Direction d;
      const Vector bx = -(1.0 - sigma) * rx;
      const Vector scaled = scaling.apply(cones, cones.inv_circ(lambda, ds_target), false);
      const Vector bz = -(1.0 - sigma) * rz + scaled;
      Vector x2, z2;
      kkt.solve(bx, bz, x2, z2);
      d.dtau = (-(1.0 - sigma) * rtau + dkappa_target / tau - c.dot(x2) - h.dot(z2)) /
               (denom_base - kappa / tau);
      d.dx = x2 + d.dtau * x1;
      d.dz = z2 + d.dtau * z1;
      d.ds = -scaled - scaling.apply(cones, scaling.apply(cones, d.dz, false), false);
      d.dkappa = -(dkappa_target + kappa * d.dtau) / tau;
      return d;
    };
    auto step_length = [&](const Direction& d) {
      double a = std::min(cones.max_step(s, d.ds), cones.max_step(z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // Predictor.
    const Vector lambda_sq = cones.circ(lambda, lambda);
    const Direction affine = direction(0.0, lambda_sq, tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(affine));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-8, 1.0);

    // Corrector with Mehrotra's second-order term.
    const Vector corr = cones.circ(scaling.apply(cones, affine.ds, true), scaling.apply(cones, affine.dz, false));
    const Vector ds_target = lambda_sq + corr - sigma * mu * e;
    const double dk_target = tau * kappa + affine.dtau * affine.dkappa - sigma * mu;
    const Direction combined = direction(sigma, ds_target, dk_target);
    const double alpha = std::min(1.0, 0.99 * step_length(combined));

    if (!(alpha > 1e-10) || !std::isfinite(alpha)) {
      if (++stalls >= 3) break;
    } else {
      stalls = 0;
    }
    const double a = std::isfinite(alpha) ? std::max(alpha, 0.0) : 0.0;
    x += a * combined.dx;
    s += a * combined.ds;
    z += a * combined.dz;
    tau += a * combined.dtau;
    kappa += a * combined.dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0) || !x.allFinite() || !z.allFinite()) break;
  }
  return finish_result(program, best_x, best_z, best_gap, iter, SolveStatus::max_iter);
}

}  // namespace detail

SolveResult solve_operator_splitting(const ConicProgram& program, const SolveSettings& settings);

SolveResult solve(const ConicProgram& program, const SolveSettings& settings) {
  settings.validate();
  program.validate();
  if (settings.algorithm == SolverAlgorithm::operator_splitting) {
    return solve_operator_splitting(program, settings);
  }
  return detail::interior_point(program, settings);
}

}  // namespace cvxnn

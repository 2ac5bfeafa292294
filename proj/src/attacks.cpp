#include "cvxnn/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace cvxnn {

void AttackConfig::validate(Index dim) const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidArgument("attack eps must be finite and >= 0");
  if (gamma >= 0.0 && !(gamma > 0.0)) throw InvalidArgument("PGD step must be > 0");
  if (steps < 1) throw InvalidArgument("PGD needs at least one step");
  if (!perturbed.empty() && static_cast<Index>(perturbed.size()) != dim) {
    throw DimensionError("perturbed-coordinate mask length does not match input dimension");
  }
}

namespace {

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

void check_dims(const NetworkWeights& weights, const Vector& x) {
  if (x.size() != weights.dim()) throw DimensionError("input length does not match network dimension");
}

// Largest value not exceeding x + eps whose difference from x rounds to at most eps,
// so the ball constraint holds exactly in floating point.
double upper_edge(double x, double eps) {
  double hi = x + eps;
  while (hi - x > eps) hi = std::nextafter(hi, -std::numeric_limits<double>::infinity());
  return hi;
}

double lower_edge(double x, double eps) {
  double lo = x - eps;
  while (x - lo > eps) lo = std::nextafter(lo, std::numeric_limits<double>::infinity());
  return lo;
}

// One signed-gradient step from `current`, clipped to the box around `origin`.
Vector signed_step(const NetworkWeights& weights, const Vector& origin, const Vector& current, double y,
                   double step, const AttackConfig& config, LossKind loss) {
  const Vector g = input_gradient(weights, current, y, loss);
  Vector next = current;
  for (Index j = 0; j < origin.size(); ++j) {
    if (!config.perturbed.empty() && !config.perturbed[static_cast<std::size_t>(j)]) continue;
    const double moved = current(j) + step * sgn(g(j));
    next(j) = std::clamp(moved, lower_edge(origin(j), config.eps), upper_edge(origin(j), config.eps));
  }
  return next;
}

}  // namespace

Vector input_gradient(const NetworkWeights& weights, const Vector& x, double y, LossKind loss) {
  check_dims(weights, x);
  Vector grad_f = Vector::Zero(x.size());
  double f = 0.0;
  for (Index j = 0; j < weights.width(); ++j) {
    const double pre = weights.hidden.col(j).dot(x);
    if (pre >= 0.0) {
      grad_f += weights.hidden.col(j) * weights.output(j);
      f += pre * weights.output(j);
    }
  }
  if (loss.is_hinge()) return -y * grad_f;
  return (f - y) * grad_f;
}

Vector fgsm(const NetworkWeights& weights, const Vector& x, double y, const AttackConfig& config, LossKind loss) {
  config.validate(x.size());
  return signed_step(weights, x, x, y, config.eps, config, loss);
}

Vector pgd(const NetworkWeights& weights, const Vector& x, double y, const AttackConfig& config, LossKind loss) {
  config.validate(x.size());
  Vector current = x;
  for (int t = 0; t < config.steps; ++t) current = signed_step(weights, x, current, y, config.step(), config, loss);
  return current;
}

Matrix attack_dataset(const NetworkWeights& weights, const Dataset& data, const AttackConfig& config,
                      LossKind loss, AttackKind kind) {
  Matrix out(data.n(), data.d());
  for (Index k = 0; k < data.n(); ++k) {
    const Vector x = data.X.row(k).transpose();
    out.row(k) = (kind == AttackKind::fgsm ? fgsm(weights, x, data.y(k), config, loss)
                                           : pgd(weights, x, data.y(k), config, loss))
                     .transpose();
  }
  return out;
}

namespace {

// sum_i d_ik (v_i - w_i)
Vector effective_direction(const ConvexSolution& s, Index k) {
  Vector g = Vector::Zero(s.v.empty() ? 0 : s.v.front().size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.patterns[i].active(k)) g += s.v[i] - s.w[i];
  }
  return g;
}

}  // namespace

Matrix hinge_worstcase_delta(const ConvexSolution& solution, const Vector& y, double eps) {
  const Index n = y.size();
  const Index d = solution.v.empty() ? 0 : solution.v.front().size();
  Matrix delta = Matrix::Zero(n, d);
  for (Index k = 0; k < n; ++k) {
    const Vector g = effective_direction(solution, k);
    for (Index j = 0; j < d; ++j) delta(k, j) = -eps * sgn(y(k) * g(j));
  }
  return delta;
}

double surrogate_sample_loss(const ConvexSolution& solution, const Dataset& data, Index k, const Vector& delta) {
  const Vector x = data.X.row(k).transpose() + delta;
  const double margin = data.y(k) * x.dot(effective_direction(solution, k));
  return std::max(0.0, 1.0 - margin) / static_cast<double>(data.n());
}

double surrogate_vertex_max(const ConvexSolution& solution, const Dataset& data, Index k, double eps) {
  const Index d = data.d();
  if (d > 20) throw InvalidArgument("vertex enumeration limited to d <= 20");
  double best = -std::numeric_limits<double>::infinity();
  Vector delta(d);
  for (Index code = 0; code < (Index{1} << d); ++code) {
    for (Index j = 0; j < d; ++j) delta(j) = ((code >> j) & 1) ? eps : -eps;
    best = std::max(best, surrogate_sample_loss(solution, data, k, delta));
  }
  return best;
}

double surrogate_inner_max_value(const ConvexSolution& solution, const Dataset& data, double eps, double beta) {
  double total = 0.0;
  for (Index k = 0; k < data.n(); ++k) {
    const Vector g = effective_direction(solution, k);
    const double term = 1.0 - data.y(k) * data.X.row(k).dot(g) + eps * g.lpNorm<1>();
    total += std::max(0.0, term);
  }
  double norms = 0.0;
  for (std::size_t i = 0; i < solution.size(); ++i) norms += solution.v[i].norm() + solution.w[i].norm();
  return total / static_cast<double>(data.n()) + beta * norms;
}

namespace {

double score(const Vector& pred, const Vector& y, bool classification) {
  double total = 0.0;
  for (Index k = 0; k < y.size(); ++k) {
    if (classification) {
      total += predict_label(pred(k)) == y(k) ? 1.0 : 0.0;
    } else {
      total += (pred(k) - y(k)) * (pred(k) - y(k));
    }
  }
  return total / static_cast<double>(y.size());
}

}  // namespace

Evaluation evaluate(const NetworkWeights& weights, const Dataset& data, const AttackConfig& config, LossKind loss) {
  config.validate(data.d());
  Evaluation out;
  out.classification = data.task == TaskKind::binary;
  const Vector clean = forward(weights, data.X);
  out.clean = score(clean, data.y, out.classification);
  out.fgsm = score(forward(weights, attack_dataset(weights, data, config, loss, AttackKind::fgsm)), data.y,
                   out.classification);
  out.pgd = score(forward(weights, attack_dataset(weights, data, config, loss, AttackKind::pgd)), data.y,
                  out.classification);
  double total = 0.0;
  for (Index k = 0; k < data.n(); ++k) total += sample_loss(clean(k), data.y(k), loss, 1);
  out.mean_loss = total / static_cast<double>(data.n());
  return out;
}

void write_attacked_csv(std::ostream& out, const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw DimensionError("row count and label count differ");
  for (Index j = 0; j < X.cols(); ++j) out << 'x' << j << ',';
  out << "y\n";
  char buf[32];
  for (Index k = 0; k < X.rows(); ++k) {
    for (Index j = 0; j < X.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", X(k, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", y(k));
    out << buf << '\n';
  }
}

}  // namespace cvxnn

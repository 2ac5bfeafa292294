#pragma once

#include "cvxnn/model.hpp"

#include <iosfwd>
#include <vector>

namespace cvxnn {

enum class AttackKind { fgsm, pgd };

struct AttackConfig {
  double eps = 0.0;
  /// PGD step; a negative value means eps / 30.
  double gamma = -1.0;
  int steps = 40;
  /// Coordinates the attacker may move; empty means all.
  std::vector<bool> perturbed;

  double step() const { return gamma < 0.0 ? eps / 30.0 : gamma; }
  void validate(Index dim) const;
};

/// Gradient of the per-sample loss in x. Hinge uses the linear branch
/// -y sum_{x.u_j >= 0} u_j alpha_j everywhere (leaky hinge with slope -> 0+).
Vector input_gradient(const NetworkWeights& weights, const Vector& x, double y, LossKind loss);

Vector fgsm(const NetworkWeights& weights, const Vector& x, double y, const AttackConfig& config, LossKind loss);
Vector pgd(const NetworkWeights& weights, const Vector& x, double y, const AttackConfig& config, LossKind loss);

/// Every row attacked; rows are independent.
Matrix attack_dataset(const NetworkWeights& weights, const Dataset& data, const AttackConfig& config,
                      LossKind loss, AttackKind kind);

/// Row k = -eps * sgn(y_k sum_i d_ik (v_i - w_i)).
Matrix hinge_worstcase_delta(const ConvexSolution& solution, const Vector& y, double eps);

/// (1/n) (1 - y_k sum_i d_ik (x_k + delta).(v_i - w_i))_+ with patterns held fixed.
double surrogate_sample_loss(const ConvexSolution& solution, const Dataset& data, Index k, const Vector& delta);

/// Per-sample maximum of surrogate_sample_loss over the 2^d vertices of the eps box.
double surrogate_vertex_max(const ConvexSolution& solution, const Dataset& data, Index k, double eps);

/// (1/n) sum_k (1 - y_k pred_k + eps ||sum_i d_ik (v_i - w_i)||_1)_+ + beta sum_i (||v_i|| + ||w_i||).
double surrogate_inner_max_value(const ConvexSolution& solution, const Dataset& data, double eps,
                                 double beta = 0.0);

struct Evaluation {
  bool classification = true;
  /// Accuracy in [0, 1] for classification, mean squared error for regression.
  double clean = 0.0;
  double fgsm = 0.0;
  double pgd = 0.0;
  /// Mean per-sample loss on clean inputs.
  double mean_loss = 0.0;
};

Evaluation evaluate(const NetworkWeights& weights, const Dataset& data, const AttackConfig& config, LossKind loss);

/// CSV with columns x0..x{d-1},y.
void write_attacked_csv(std::ostream& out, const Matrix& X, const Vector& y);

}  // namespace cvxnn

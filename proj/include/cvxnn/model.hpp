#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvxnn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class TaskKind { binary, regression };

std::string to_string(TaskKind task);
TaskKind task_from_string(const std::string& name);

/// Data matrix (one sample per row), targets, and the task they describe.
struct Dataset {
  Matrix X;
  Vector y;
  TaskKind task = TaskKind::binary;
  bool bias_appended = false;

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }

  /// Throws InvalidArgument when the invariants (shape, finiteness, ±1 labels) fail.
  void validate() const;
};

Dataset make_dataset(Matrix X, Vector y, TaskKind task);

/// Returns a copy of `data` with a trailing constant-one column.
Dataset append_bias(const Dataset& data);

/// One-hidden-layer ReLU network. Column j of `hidden` is u_j, `output(j)` is alpha_j.
struct NetworkWeights {
  Matrix hidden;
  Vector output;

  NetworkWeights() = default;
  NetworkWeights(Matrix hidden_weights, Vector output_weights);
  static NetworkWeights empty(Index dim);

  Index width() const { return output.size(); }
  Index dim() const { return hidden.rows(); }
};

/// Diagonal of a D matrix: mask(k) = 1 iff sample k activates the neuron.
struct ActivationPattern {
  std::vector<std::uint8_t> mask;

  ActivationPattern() = default;
  explicit ActivationPattern(std::vector<std::uint8_t> bits) : mask(std::move(bits)) {}

  Index size() const { return static_cast<Index>(mask.size()); }
  bool active(Index k) const { return mask[static_cast<std::size_t>(k)] != 0; }
  Vector as_vector() const;
  std::string key() const;

  friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
  friend auto operator<=>(const ActivationPattern&, const ActivationPattern&) = default;
};

/// Per-pattern pairs (v_i, w_i) of a convex training program and its optimal value.
struct ConvexSolution {
  std::vector<ActivationPattern> patterns;
  std::vector<Vector> v;
  std::vector<Vector> w;
  double objective = 0.0;

  std::size_t size() const { return patterns.size(); }
};

struct LossKind {
  enum class Kind { hinge, squared };
  Kind kind = Kind::hinge;
  // Slope of the flat hinge branch. Only used to justify attack gradients; must be < 1.
  double leaky_slope = 0.0;

  static LossKind hinge(double leaky_slope = 0.0);
  static LossKind squared();
  bool is_hinge() const { return kind == Kind::hinge; }
};

std::string to_string(LossKind loss);
LossKind loss_from_string(const std::string& name);

/// +1 iff prediction >= 0.
inline double predict_label(double score) { return score >= 0.0 ? 1.0 : -1.0; }

Vector forward(const NetworkWeights& weights, const Matrix& X);

/// Data-fit term: hinge uses the 1/n mean, squared uses 1/2 ||yhat - y||^2.
double loss_value(const Vector& predictions, const Vector& y, LossKind loss);

/// Loss contributed by a single sample under the same convention as loss_value
/// (so hinge terms carry the 1/n factor).
double sample_loss(double prediction, double target, LossKind loss, Index n);

/// (1/2) sum_j (||u_j||^2 + alpha_j^2)
double weight_penalty(const NetworkWeights& weights);

double regularized_objective(const NetworkWeights& weights, const Dataset& data, double beta,
                             LossKind loss);

/// Lower bound on the adversarial objective: the per-sample inner maximum over the
/// l-infinity box of radius eps is approximated by scanning its 2^d vertices and a
/// regular grid of grid_resolution^d points. Only defined for d <= 3.
double adversarial_objective_grid_oracle(const NetworkWeights& weights, const Dataset& data,
                                         double beta, double eps, LossKind loss,
                                         int grid_resolution);

}  // namespace cvxnn

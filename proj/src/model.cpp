#include "cvxnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cvxnn {

std::string to_string(TaskKind task) { return task == TaskKind::binary ? "binary" : "regression"; }

TaskKind task_from_string(const std::string& name) {
  if (name == "binary") return TaskKind::binary;
  if (name == "regression") return TaskKind::regression;
  throw InvalidArgument("unknown task kind: " + name);
}

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1) throw InvalidArgument("dataset needs n >= 1 and d >= 1");
  if (y.size() != X.rows()) {
    std::ostringstream msg;
    msg << "target length " << y.size() << " does not match " << X.rows() << " rows";
    throw DimensionError(msg.str());
  }
  if (!X.allFinite() || !y.allFinite()) throw InvalidArgument("dataset contains NaN or Inf");
  if (task == TaskKind::binary) {
    for (Index k = 0; k < y.size(); ++k) {
      if (y(k) != 1.0 && y(k) != -1.0) throw InvalidArgument("binary labels must be -1 or +1");
    }
  }
}

Dataset make_dataset(Matrix X, Vector y, TaskKind task) {
  Dataset data{std::move(X), std::move(y), task, false};
  data.validate();
  return data;
}

Dataset append_bias(const Dataset& data) {
  Dataset out = data;
  out.X.conservativeResize(data.n(), data.d() + 1);
  out.X.col(data.d()).setOnes();
  out.bias_appended = true;
  return out;
}

NetworkWeights::NetworkWeights(Matrix hidden_weights, Vector output_weights)
    : hidden(std::move(hidden_weights)), output(std::move(output_weights)) {
  if (hidden.cols() != output.size()) throw DimensionError("hidden and output widths differ");
}

NetworkWeights NetworkWeights::empty(Index dim) { return NetworkWeights(Matrix(dim, 0), Vector(0)); }

Vector ActivationPattern::as_vector() const {
  Vector out(size());
  for (Index k = 0; k < size(); ++k) out(k) = active(k) ? 1.0 : 0.0;
  return out;
}

std::string ActivationPattern::key() const {
  std::string out(mask.size(), '0');
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask[k]) out[k] = '1';
  }
  return out;
}

LossKind LossKind::hinge(double leaky_slope) {
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw InvalidArgument("leaky hinge slope must lie in [0, 1)");
  }
  return LossKind{Kind::hinge, leaky_slope};
}

LossKind LossKind::squared() { return LossKind{Kind::squared, 0.0}; }

std::string to_string(LossKind loss) { return loss.is_hinge() ? "hinge" : "squared"; }

LossKind loss_from_string(const std::string& name) {
  if (name == "hinge") return LossKind::hinge();
  if (name == "squared") return LossKind::squared();
  throw InvalidArgument("unknown loss: " + name);
}

Vector forward(const NetworkWeights& weights, const Matrix& X) {
  if (X.cols() != weights.dim()) {
    std::ostringstream msg;
    msg << "input has " << X.cols() << " columns, network expects " << weights.dim();
    throw DimensionError(msg.str());
  }
  if (weights.width() == 0) return Vector::Zero(X.rows());
  return (X * weights.hidden).cwiseMax(0.0) * weights.output;
}

double sample_loss(double prediction, double target, LossKind loss, Index n) {
  if (loss.is_hinge()) return std::max(0.0, 1.0 - target * prediction) / static_cast<double>(n);
  const double r = prediction - target;
  return 0.5 * r * r;
}

double loss_value(const Vector& predictions, const Vector& y, LossKind loss) {
  if (predictions.size() != y.size()) throw DimensionError("prediction/target length mismatch");
  if (loss.is_hinge()) {
    return (1.0 - y.cwiseProduct(predictions).array()).cwiseMax(0.0).sum() /
           static_cast<double>(y.size());
  }
  return 0.5 * (predictions - y).squaredNorm();
}

double weight_penalty(const NetworkWeights& weights) {
  return 0.5 * (weights.hidden.squaredNorm() + weights.output.squaredNorm());
}

double regularized_objective(const NetworkWeights& weights, const Dataset& data, double beta,
                             LossKind loss) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and >= 0");
  return loss_value(forward(weights, data.X), data.y, loss) + beta * weight_penalty(weights);
}

namespace {

double network_output(const NetworkWeights& weights, const Eigen::Ref<const Vector>& x) {
  double out = 0.0;
  for (Index j = 0; j < weights.width(); ++j) {
    out += std::max(0.0, weights.hidden.col(j).dot(x)) * weights.output(j);
  }
  return out;
}

// Visits every point of {-eps, +eps}^d followed by a resolution^d grid on [-eps, eps]^d.
template <typename Visit>
void scan_box(Index dim, double eps, int resolution, Visit&& visit) {
  Vector delta(dim);
  const Index vertices = Index{1} << dim;
  for (Index code = 0; code < vertices; ++code) {
    for (Index j = 0; j < dim; ++j) delta(j) = ((code >> j) & 1) ? eps : -eps;
    visit(delta);
  }
  Index total = 1;
  for (Index j = 0; j < dim; ++j) total *= resolution;
  const double step = 2.0 * eps / static_cast<double>(resolution - 1);
  for (Index code = 0; code < total; ++code) {
    Index rest = code;
    for (Index j = 0; j < dim; ++j) {
      delta(j) = -eps + step * static_cast<double>(rest % resolution);
      rest /= resolution;
    }
    visit(delta);
  }
}

}  // namespace

double adversarial_objective_grid_oracle(const NetworkWeights& weights, const Dataset& data,
                                         double beta, double eps, LossKind loss,
                                         int grid_resolution) {
  if (data.d() > 3) throw InvalidArgument("grid oracle supports d <= 3 only");
  if (grid_resolution < 2) throw InvalidArgument("grid resolution must be >= 2");
  if (!(eps >= 0.0)) throw InvalidArgument("eps must be >= 0");
  if (weights.dim() != data.d()) throw DimensionError("network and data dimensions differ");

  double total = 0.0;
  Vector x(data.d());
  for (Index k = 0; k < data.n(); ++k) {
    double worst = -std::numeric_limits<double>::infinity();
    scan_box(data.d(), eps, grid_resolution, [&](const Vector& delta) {
      x = data.X.row(k).transpose() + delta;
      worst = std::max(worst, sample_loss(network_output(weights, x), data.y(k), loss, data.n()));
    });
    total += worst;
  }
  return total + beta * weight_penalty(weights);
}

}  // namespace cvxnn

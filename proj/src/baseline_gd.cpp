#include "cvxnn/baseline_gd.hpp"

#include "cvxnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cvxnn {

void GdConfig::validate() const {
  if (m < 1) throw InvalidArgument("GD width m must be >= 1");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw InvalidArgument("learning rate must be finite and > 0");
  if (batch < 0) throw InvalidArgument("batch size must be >= 0");
}

NetworkWeights subgradient(const NetworkWeights& weights, const Dataset& data, double beta, LossKind loss) {
  if (data.d() != weights.dim()) throw DimensionError("network and data dimensions differ");
  const Index n = data.n();
  const Matrix pre = data.X * weights.hidden;  // n x m
  const Matrix act = pre.cwiseMax(0.0);
  const Vector f = act * weights.output;
  Vector dloss(n);
  for (Index k = 0; k < n; ++k) {
    if (loss.is_hinge()) {
      dloss(k) = 1.0 - data.y(k) * f(k) > 0.0 ? -data.y(k) / static_cast<double>(n) : 0.0;
    } else {
      dloss(k) = f(k) - data.y(k);
    }
  }
  NetworkWeights grad(Matrix(weights.hidden.rows(), weights.hidden.cols()), Vector(weights.width()));
  grad.output = act.transpose() * dloss + beta * weights.output;
  // d f_k / d u_j = alpha_j x_k [x_k . u_j > 0]
  const Matrix gate = (pre.array() > 0.0).cast<double>().matrix();
  const Matrix back = gate.array().colwise() * dloss.array();
  grad.hidden = data.X.transpose() * back;
  grad.hidden.array().rowwise() *= weights.output.transpose().array();
  grad.hidden += beta * weights.hidden;
  return grad;
}

NetworkWeights gd_initial_weights(Index dim, const GdConfig& config) {
  config.validate();
  const double scale = config.init_scale < 0.0 ? 1.0 / std::sqrt(static_cast<double>(dim)) : config.init_scale;
  Engine rng = StreamFactory(config.seed).stream({2});
  Matrix u(dim, config.m);
  for (Index j = 0; j < config.m; ++j) {
    for (Index r = 0; r < dim; ++r) u(r, j) = scale * standard_normal(rng);
  }
  Vector alpha(config.m);
  for (Index j = 0; j < config.m; ++j) alpha(j) = scale * standard_normal(rng);
  return NetworkWeights(std::move(u), std::move(alpha));
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<Index>& rows) {
  Dataset out{Matrix(static_cast<Index>(rows.size()), data.d()), Vector(static_cast<Index>(rows.size())), data.task,
              data.bias_appended};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Index>(r)) = data.X.row(rows[r]);
    out.y(static_cast<Index>(r)) = data.y(rows[r]);
  }
  return out;
}

}  // namespace

NetworkWeights gd_train(const Dataset& data, double beta, LossKind loss, const GdConfig& config,
                        const std::optional<Adversary>& adversary, std::vector<double>* trace) {
  data.validate();
  NetworkWeights weights = gd_initial_weights(data.d(), config);
  Engine shuffle = StreamFactory(config.seed).stream({3});
  std::vector<Index> order(static_cast<std::size_t>(data.n()));
  std::iota(order.begin(), order.end(), Index{0});
  const Index batch = config.batch == 0 ? data.n() : std::min(config.batch, data.n());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Dataset inputs = data;
    if (adversary) inputs.X = attack_dataset(weights, data, adversary->config, loss, adversary->kind);
    const double objective = regularized_objective(weights, inputs, beta, loss);
    if (!std::isfinite(objective)) throw std::runtime_error("gradient descent diverged");
    if (trace) trace->push_back(objective);

    if (batch == data.n()) {
      const NetworkWeights g = subgradient(weights, inputs, beta, loss);
      weights.hidden -= config.lr * g.hidden;
      weights.output -= config.lr * g.output;
      continue;
    }
    // Fisher-Yates with the engine directly keeps the permutation platform-stable.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle() % i)]);
    }
    for (Index start = 0; start < data.n(); start += batch) {
      const std::vector<Index> rows(order.begin() + start, order.begin() + std::min(start + batch, data.n()));
      const NetworkWeights g = subgradient(weights, take_rows(inputs, rows), beta, loss);
      weights.hidden -= config.lr * g.hidden;
      weights.output -= config.lr * g.output;
    }
  }
  return weights;
}

}  // namespace cvxnn

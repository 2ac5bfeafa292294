#pragma once

#include "cvxnn/attacks.hpp"
#include "cvxnn/model.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cvxnn {

struct GdConfig {
  Index m = 240;
  int epochs = 2000;
  double lr = 1e-2;
  /// 0 means full batch.
  Index batch = 0;
  std::uint64_t seed = 0;
  /// Negative means 1/sqrt(d).
  double init_scale = -1.0;

  void validate() const;
};

struct Adversary {
  AttackKind kind = AttackKind::pgd;
  AttackConfig config;
};

/// Subgradient of regularized_objective with ReLU'(0) = 0 and a zero hinge
/// derivative at margin exactly 1. Same shape as `weights`.
NetworkWeights subgradient(const NetworkWeights& weights, const Dataset& data, double beta, LossKind loss);

NetworkWeights gd_initial_weights(Index dim, const GdConfig& config);

/// Subgradient descent on the regularized objective. With an adversary, inputs are
/// re-attacked once per epoch against the current weights. `trace`, when given,
/// receives the objective on the (possibly attacked) inputs before every epoch.
/// Throws std::runtime_error if the objective stops being finite.
NetworkWeights gd_train(const Dataset& data, double beta, LossKind loss, const GdConfig& config,
                        const std::optional<Adversary>& adversary = std::nullopt,
                        std::vector<double>* trace = nullptr);

}  // namespace cvxnn

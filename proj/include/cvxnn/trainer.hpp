#pragma once

#include "cvxnn/model.hpp"
#include "cvxnn/patterns.hpp"
#include "cvxnn/program_builder.hpp"
#include "cvxnn/solver.hpp"

#include <stdexcept>
#include <string>

namespace cvxnn {

/// The solver reported infeasible or unbounded; carries the status for diagnostics.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, SolveStatus status) : std::runtime_error(what), status(status) {}
  SolveStatus status;
};

/// Pattern constraints fail on X, so the convex and network objectives need not agree.
class ConstraintViolation : public std::runtime_error {
 public:
  ConstraintViolation(const std::string& what, double violation)
      : std::runtime_error(what), violation(violation) {}
  double violation;
};

struct TrainMeta {
  bool adversarial = false;
  Index P_s_requested = 0;
  Index P_s_used = 0;
  Index raw_draws = 0;
  std::uint64_t seed = 0;
  double eps = 0.0;
  PerturbationNorm norm = PerturbationNorm::linf;
  double beta = 0.0;
  LossKind loss;
  SolveStatus status = SolveStatus::optimal;
  /// Solver stopped without a certificate; weights are still recovered.
  bool degraded = false;
  Index iterations = 0;
  double gap = 0.0;
  double max_violation = 0.0;
  /// Number of nonzero v_i plus nonzero w_i.
  Index m_star = 0;
};

struct TrainedModel {
  NetworkWeights weights;
  ConvexSolution convex;
  TrainMeta meta;
};

/// Default recovery threshold: 1e-8 * (1 + largest group norm).
double default_zero_tol(const ConvexSolution& solution);

/// u = v / sqrt(||v||), alpha = +sqrt(||v||) for every v_i above zero_tol, then the
/// same for w_i with alpha negated. A negative zero_tol selects the default.
NetworkWeights recover_weights(const ConvexSolution& solution, double zero_tol = -1.0);

TrainedModel train_standard(const Dataset& data, double beta, const SamplerConfig& sampler, LossKind loss,
                            const SolveSettings& settings = {});

TrainedModel train_adversarial(const Dataset& data, double beta, const RobustSpec& spec,
                               const SamplerConfig& sampler, LossKind loss, const SolveSettings& settings = {});
TrainedModel train_adversarial(const Dataset& data, double beta, double eps, const SamplerConfig& sampler,
                               LossKind loss, const SolveSettings& settings = {});

/// Largest violation of (2D_i - I) X v_i >= 0 and the same for w_i.
double pattern_constraint_violation(const ConvexSolution& solution, const Matrix& X);

/// |loss(sum_i D_i X (v_i - w_i)) + beta sum_i(||v_i|| + ||w_i||) - regularized_objective(weights)|.
/// Throws ConstraintViolation when the pattern constraints fail on X by more than tol.
double cost_equality_residual(const TrainedModel& model, const Dataset& data, double beta, LossKind loss,
                              double tol = 1e-6);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);

}  // namespace cvxnn

#pragma once

#include "cvxnn/conic_program.hpp"
#include "cvxnn/model.hpp"

#include <string>
#include <vector>

namespace cvxnn {

/// Norm of the per-sample perturbation ball. The programs use its dual norm:
/// linf -> l1, l2 -> l2, l1 -> linf.
enum class PerturbationNorm { l1, l2, linf };

std::string to_string(PerturbationNorm norm);
PerturbationNorm norm_from_string(const std::string& name);

struct RobustSpec {
  double eps = 0.0;
  PerturbationNorm norm = PerturbationNorm::linf;
  /// Columns the adversary may move. Empty means every column; a frozen bias column
  /// is expressed by clearing its entry.
  std::vector<bool> perturbed;

  bool column_perturbed(Index j) const { return perturbed.empty() || perturbed[static_cast<std::size_t>(j)]; }
  void validate(Index dim) const;
};

/// Perturb every column except an appended bias column when `freeze_bias` is set.
RobustSpec robust_spec(const Dataset& data, double eps, PerturbationNorm norm = PerturbationNorm::linf,
                       bool freeze_bias = false);

ConicProgram build_standard(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                            LossKind loss);
ConicProgram build_hinge_robust(const Dataset& data, const std::vector<ActivationPattern>& patterns,
                                double beta, const RobustSpec& spec);
ConicProgram build_squared_robust(const Dataset& data, const std::vector<ActivationPattern>& patterns,
                                  double beta, const RobustSpec& spec);
ConicProgram build_lp_robust(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                             const RobustSpec& spec);

/// Picks the builder for (loss, spec): hinge with any norm goes through
/// build_lp_robust, squared through build_squared_robust.
ConicProgram build_program(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                           LossKind loss, const RobustSpec& spec);

ConvexSolution decode_solution(const ConicProgram& program, const Vector& raw_primal);

}  // namespace cvxnn

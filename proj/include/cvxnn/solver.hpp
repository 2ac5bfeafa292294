#pragma once

#include "cvxnn/conic_program.hpp"

#include <string>

namespace cvxnn {

enum class SolveStatus { optimal, max_iter, infeasible, unbounded };

std::string to_string(SolveStatus status);

enum class SolverAlgorithm {
  interior_point,      // homogeneous self-dual embedding, Nesterov-Todd scaling
  operator_splitting,  // ADMM; cheaper per iteration, loose certificates
};

struct SolveSettings {
  double tol_gap = 1e-8;
  double tol_feas = 1e-8;
  int max_iter = 20000;
  SolverAlgorithm algorithm = SolverAlgorithm::interior_point;
  // Diagonal shift of the KKT system (both blocks); refinement removes most of its effect.
  double static_regularization = 1e-9;
  bool verbose = false;

  void validate() const;
};

struct SolveResult {
  SolveStatus status = SolveStatus::max_iter;
  Vector primal;
  Vector dual;  // multipliers of the nonneg rows followed by the soc rows
  double objective = 0.0;
  double gap = 0.0;
  double max_violation = 0.0;
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::optimal; }
};

struct PointCheck {
  double objective = 0.0;
  double max_violation = 0.0;
};

/// Exact objective and the largest violation over all nonneg rows (max(0, -row)) and
/// cone blocks (max(0, ||t|| - s)).
PointCheck check_point(const ConicProgram& program, const Vector& point);

SolveResult solve(const ConicProgram& program, const SolveSettings& settings = {});

}  // namespace cvxnn

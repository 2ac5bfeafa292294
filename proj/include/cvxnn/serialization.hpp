#pragma once

#include "cvxnn/conic_program.hpp"
#include "cvxnn/solver.hpp"

#include <string>

namespace cvxnn {

/// Sparse JSON schema:
///   {"var_count", "objective": {"dense": [...], "offset"},
///    "nonneg": {"rows", "triplets": [[row, col, value], ...], "offset": [...]},
///    "soc": {"rows", "triplets", "offset", "blocks": [[first_row, size], ...]},
///    "layout": [{"name", "group", "first", "size"}, ...],
///    "patterns": [[0/1, ...], ...], "data_dim"}
/// Triplets are listed column by column, rows ascending within a column.
std::string program_to_json(const ConicProgram& program);
ConicProgram program_from_json_string(const std::string& text);

/// {"status", "objective", "gap", "max_violation", "iterations", "primal": [...]}
std::string solve_result_to_json(const SolveResult& result);

}  // namespace cvxnn

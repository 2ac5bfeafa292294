#pragma once

#include "cvxnn/model.hpp"

#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace cvxnn {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct LinearTerm {
  Index var;
  double coeff;
};

/// sum(terms) + constant
struct AffineRow {
  std::vector<LinearTerm> terms;
  double constant = 0.0;
};

/// Rows [first_row, first_row + size) of the SOC section: ||rows 1..size-1||_2 <= row 0.
struct SocBlock {
  Index first_row = 0;
  Index size = 0;
};

/// Named index range of the variable vector. `group` is the pattern index for
/// per-pattern spans and -1 otherwise.
struct VariableSpan {
  std::string name;
  Index group = -1;
  Index first = 0;
  Index size = 0;
};

/// Linear objective over z subject to
///   nonneg_matrix * z + nonneg_offset >= 0            (componentwise)
///   soc_matrix * z + soc_offset in a product of second-order cones (soc_blocks).
/// Immutable once assembled.
class ConicProgram {
 public:
  ConicProgram() = default;

  Index var_count() const { return var_count_; }
  const Vector& objective() const { return objective_; }
  double objective_offset() const { return objective_offset_; }

  const SparseMatrix& nonneg_matrix() const { return nonneg_matrix_; }
  const Vector& nonneg_offset() const { return nonneg_offset_; }
  Index nonneg_rows() const { return nonneg_offset_.size(); }

  const SparseMatrix& soc_matrix() const { return soc_matrix_; }
  const Vector& soc_offset() const { return soc_offset_; }
  const std::vector<SocBlock>& soc_blocks() const { return soc_blocks_; }
  Index soc_rows() const { return soc_offset_.size(); }

  const std::vector<VariableSpan>& layout() const { return layout_; }
  /// First span with this name and group; throws when absent.
  const VariableSpan& span(const std::string& name, Index group = -1) const;
  bool has_span(const std::string& name, Index group = -1) const;

  /// Activation patterns the program was built from (empty for generic programs).
  const std::vector<ActivationPattern>& patterns() const { return patterns_; }
  Index data_dim() const { return data_dim_; }

  double objective_value(const Vector& z) const;

  /// Throws InvalidArgument on out-of-range indices, NaN coefficients, overlapping
  /// cone blocks, or overlapping layout spans.
  void validate() const;

 private:
  friend class ProgramAssembler;
  friend ConicProgram program_from_json_string(const std::string& text);

  Index var_count_ = 0;
  Vector objective_;
  double objective_offset_ = 0.0;
  SparseMatrix nonneg_matrix_;
  Vector nonneg_offset_;
  SparseMatrix soc_matrix_;
  Vector soc_offset_;
  std::vector<SocBlock> soc_blocks_;
  std::vector<VariableSpan> layout_;
  std::vector<ActivationPattern> patterns_;
  Index data_dim_ = 0;
};

/// Incremental construction of a ConicProgram. Rows are stored in insertion order,
/// which keeps assembled programs reproducible.
class ProgramAssembler {
 public:
  Index add_variables(const std::string& name, Index size, Index group = -1);
  Index var_count() const { return var_count_; }

  void add_objective(Index var, double coeff);
  void add_objective_constant(double value) { objective_offset_ += value; }

  void add_nonneg(const AffineRow& row);
  /// rows[0] bounds the Euclidean norm of rows[1..].
  void add_soc(const std::vector<AffineRow>& rows);

  void set_patterns(std::vector<ActivationPattern> patterns, Index data_dim);

  ConicProgram finish() const;

 private:
  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  Index var_count_ = 0;
  std::vector<std::pair<Index, double>> objective_terms_;
  double objective_offset_ = 0.0;
  std::vector<Triplet> nonneg_triplets_;
  std::vector<double> nonneg_offset_;
  std::vector<Triplet> soc_triplets_;
  std::vector<double> soc_offset_;
  std::vector<SocBlock> soc_blocks_;
  std::vector<VariableSpan> layout_;
  std::vector<ActivationPattern> patterns_;
  Index data_dim_ = 0;
};

}  // namespace cvxnn

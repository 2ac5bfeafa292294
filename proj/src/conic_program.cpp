#include "cvxnn/conic_program.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cvxnn {

const VariableSpan& ConicProgram::span(const std::string& name, Index group) const {
  for (const auto& s : layout_) {
    if (s.name == name && s.group == group) return s;
  }
  std::ostringstream msg;
  msg << "program has no span '" << name << "' for group " << group;
  throw InvalidArgument(msg.str());
}

bool ConicProgram::has_span(const std::string& name, Index group) const {
  return std::any_of(layout_.begin(), layout_.end(),
                     [&](const VariableSpan& s) { return s.name == name && s.group == group; });
}

double ConicProgram::objective_value(const Vector& z) const {
  if (z.size() != var_count_) throw DimensionError("point length differs from var_count");
  return objective_.dot(z) + objective_offset_;
}

namespace {

void check_matrix(const SparseMatrix& m, Index cols, const char* what) {
  if (m.cols() != cols) {
    throw InvalidArgument(std::string(what) + " matrix column count differs from var_count");
  }
  for (Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      if (!std::isfinite(it.value())) {
        throw InvalidArgument(std::string(what) + " matrix has a non-finite coefficient");
      }
    }
  }
}

}  // namespace

void ConicProgram::validate() const {
  if (objective_.size() != var_count_) throw InvalidArgument("objective length differs from var_count");
  if (!objective_.allFinite() || !std::isfinite(objective_offset_)) {
    throw InvalidArgument("objective has a non-finite coefficient");
  }
  check_matrix(nonneg_matrix_, var_count_, "nonneg");
  check_matrix(soc_matrix_, var_count_, "soc");
  if (nonneg_matrix_.rows() != nonneg_offset_.size() || soc_matrix_.rows() != soc_offset_.size()) {
    throw InvalidArgument("row counts of cone matrices and offsets differ");
  }
  if (!nonneg_offset_.allFinite() || !soc_offset_.allFinite()) {
    throw InvalidArgument("cone offsets contain non-finite values");
  }
  Index next = 0;
  for (const auto& block : soc_blocks_) {
    if (block.size < 1 || block.first_row != next) {
      throw InvalidArgument("second-order cone blocks must be contiguous and non-overlapping");
    }
    next += block.size;
  }
  if (next != soc_rows()) throw InvalidArgument("second-order cone blocks do not cover the soc rows");

  std::vector<std::pair<Index, Index>> ranges;
  for (const auto& s : layout_) {
    if (s.first < 0 || s.size < 0 || s.first + s.size > var_count_) {
      throw InvalidArgument("layout span '" + s.name + "' exceeds var_count");
    }
    if (s.size > 0) ranges.emplace_back(s.first, s.first + s.size);
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) throw InvalidArgument("layout spans overlap");
  }
}

Index ProgramAssembler::add_variables(const std::string& name, Index size, Index group) {
  if (size < 0) throw InvalidArgument("negative span size");
  const Index first = var_count_;
  layout_.push_back(VariableSpan{name, group, first, size});
  var_count_ += size;
  return first;
}

void ProgramAssembler::add_objective(Index var, double coeff) {
  if (var < 0 || var >= var_count_) throw InvalidArgument("objective index out of range");
  objective_terms_.emplace_back(var, coeff);
}

void ProgramAssembler::add_nonneg(const AffineRow& row) {
  const auto r = static_cast<Index>(nonneg_offset_.size());
  for (const auto& t : row.terms) {
    if (t.var < 0 || t.var >= var_count_) throw InvalidArgument("constraint index out of range");
    nonneg_triplets_.push_back({r, t.var, t.coeff});
  }
  nonneg_offset_.push_back(row.constant);
}

void ProgramAssembler::add_soc(const std::vector<AffineRow>& rows) {
  if (rows.empty()) throw InvalidArgument("empty second-order cone");
  const auto first = static_cast<Index>(soc_offset_.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = first + static_cast<Index>(i);
    for (const auto& t : rows[i].terms) {
      if (t.var < 0 || t.var >= var_count_) throw InvalidArgument("constraint index out of range");
      soc_triplets_.push_back({r, t.var, t.coeff});
    }
    soc_offset_.push_back(rows[i].constant);
  }
  soc_blocks_.push_back(SocBlock{first, static_cast<Index>(rows.size())});
}

void ProgramAssembler::set_patterns(std::vector<ActivationPattern> patterns, Index data_dim) {
  patterns_ = std::move(patterns);
  data_dim_ = data_dim;
}

namespace {

template <typename T>
SparseMatrix to_sparse(const std::vector<T>& triplets, Index rows, Index cols) {
  std::vector<Eigen::Triplet<double>> eigen_triplets;
  eigen_triplets.reserve(triplets.size());
  for (const auto& t : triplets) eigen_triplets.emplace_back(t.row, t.col, t.value);
  SparseMatrix m(rows, cols);
  m.setFromTriplets(eigen_triplets.begin(), eigen_triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

ConicProgram ProgramAssembler::finish() const {
  ConicProgram p;
  p.var_count_ = var_count_;
  p.objective_ = Vector::Zero(var_count_);
  for (const auto& [var, coeff] : objective_terms_) p.objective_(var) += coeff;
  p.objective_offset_ = objective_offset_;
  p.nonneg_offset_ = Eigen::Map<const Vector>(nonneg_offset_.data(),
                                              static_cast<Index>(nonneg_offset_.size()));
  p.nonneg_matrix_ = to_sparse(nonneg_triplets_, p.nonneg_offset_.size(), var_count_);
  p.soc_offset_ = Eigen::Map<const Vector>(soc_offset_.data(), static_cast<Index>(soc_offset_.size()));
  p.soc_matrix_ = to_sparse(soc_triplets_, p.soc_offset_.size(), var_count_);
  p.soc_blocks_ = soc_blocks_;
  p.layout_ = layout_;
  p.patterns_ = patterns_;
  p.data_dim_ = data_dim_;
  p.validate();
  return p;
}

}  // namespace cvxnn

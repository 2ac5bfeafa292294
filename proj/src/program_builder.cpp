#include "cvxnn/program_builder.hpp"

#include <cmath>
#include <sstream>

namespace cvxnn {

std::string to_string(PerturbationNorm norm) {
  switch (norm) {
    case PerturbationNorm::l1: return "1";
    case PerturbationNorm::l2: return "2";
    case PerturbationNorm::linf: return "inf";
  }
  return "inf";
}

PerturbationNorm norm_from_string(const std::string& name) {
  if (name == "1") return PerturbationNorm::l1;
  if (name == "2") return PerturbationNorm::l2;
  if (name == "inf") return PerturbationNorm::linf;
  throw InvalidArgument("unsupported perturbation norm: " + name + " (expected 1, 2 or inf)");
}

void RobustSpec::validate(Index dim) const {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be finite and >= 0");
  if (!perturbed.empty() && static_cast<Index>(perturbed.size()) != dim) {
    throw DimensionError("perturbed-column mask length does not match data dimension");
  }
}

RobustSpec robust_spec(const Dataset& data, double eps, PerturbationNorm norm, bool freeze_bias) {
  RobustSpec spec{eps, norm, {}};
  if (freeze_bias && data.bias_appended) {
    spec.perturbed.assign(static_cast<std::size_t>(data.d()), true);
    spec.perturbed.back() = false;
  }
  return spec;
}

namespace {

struct PatternVars {
  Index v, w, b, c;
};

class Builder {
 public:
  Builder(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
          const RobustSpec& spec)
      : data_(data), patterns_(patterns), spec_(spec) {
    data.validate();
    if (patterns.empty()) throw InvalidArgument("pattern list is empty");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and > 0");
    spec.validate(data.d());
    for (const auto& p : patterns) {
      if (p.size() != data.n()) throw DimensionError("pattern length does not match sample count");
    }
    const Index d = data.d();
    for (std::size_t i = 0; i < patterns.size(); ++i) {
      const auto g = static_cast<Index>(i);
      PatternVars pv;
      pv.v = a_.add_variables("v", d, g);
      pv.w = a_.add_variables("w", d, g);
      pv.b = a_.add_variables("b", 1, g);
      pv.c = a_.add_variables("c", 1, g);
      a_.add_objective(pv.b, beta);
      a_.add_objective(pv.c, beta);
      vars_.push_back(pv);
    }
    for (Index j = 0; j < d; ++j) {
      if (spec.column_perturbed(j)) perturbed_cols_.push_back(j);
    }
  }

  bool robust() const { return spec_.eps > 0.0 && !perturbed_cols_.empty(); }

  // sum_i d_ik x_k.(v_i - w_i)
  AffineRow prediction(Index k) const {
    AffineRow row;
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
      if (!patterns_[i].active(k)) continue;
      for (Index j = 0; j < data_.d(); ++j) {
        const double x = data_.X(k, j);
        if (x == 0.0) continue;
        row.terms.push_back({vars_[i].v + j, x});
        row.terms.push_back({vars_[i].w + j, -x});
      }
    }
    return row;
  }

  // Terms whose sum bounds eps * ||e||_q from above, where e_j = sum_i d_ik (v_ij - w_ij)
  // over perturbed columns. Empty when the program is not robust.
  std::vector<LinearTerm> sample_norm_bound(Index k) {
    if (!robust()) return {};
    std::vector<AffineRow> exprs;
    for (Index j : perturbed_cols_) {
      AffineRow e;
      for (std::size_t i = 0; i < patterns_.size(); ++i) {
        if (!patterns_[i].active(k)) continue;
        e.terms.push_back({vars_[i].v + j, 1.0});
        e.terms.push_back({vars_[i].w + j, -1.0});
      }
      exprs.push_back(std::move(e));
    }
    return dual_norm_bound(exprs, "sample_norm", k);
  }

  // (2D_i - I) X u >= eps ||u||_q row by row, for u = v_i or w_i.
  void add_pattern_constraints() {
    for (std::size_t i = 0; i < patterns_.size(); ++i) {
      for (int side = 0; side < 2; ++side) {
        const Index base = side == 0 ? vars_[i].v : vars_[i].w;
        std::vector<LinearTerm> bound;
        if (robust()) {
          std::vector<AffineRow> exprs;
          for (Index j : perturbed_cols_) exprs.push_back(AffineRow{{{base + j, 1.0}}, 0.0});
          bound = dual_norm_bound(exprs, side == 0 ? "v_norm" : "w_norm", static_cast<Index>(i));
        }
        for (Index k = 0; k < data_.n(); ++k) {
          const double sign = patterns_[i].active(k) ? 1.0 : -1.0;
          AffineRow row;
          for (Index j = 0; j < data_.d(); ++j) {
            const double x = data_.X(k, j);
            if (x != 0.0) row.terms.push_back({base + j, sign * x});
          }
          for (const auto& t : bound) row.terms.push_back({t.var, -spec_.eps * t.coeff});
          a_.add_nonneg(row);
        }
      }
    }
  }

  void add_group_norms() {
    const Index d = data_.d();
    for (const auto& pv : vars_) {
      for (auto [vec, bound] : {std::pair{pv.v, pv.b}, std::pair{pv.w, pv.c}}) {
        std::vector<AffineRow> rows{AffineRow{{{bound, 1.0}}, 0.0}};
        for (Index j = 0; j < d; ++j) rows.push_back(AffineRow{{{vec + j, 1.0}}, 0.0});
        a_.add_soc(rows);
      }
    }
  }

  ProgramAssembler& assembler() { return a_; }

  ConicProgram finish() {
    a_.set_patterns(patterns_, data_.d());
    return a_.finish();
  }

  double eps() const { return spec_.eps; }

 private:
  std::vector<LinearTerm> dual_norm_bound(const std::vector<AffineRow>& exprs, const std::string& name,
                                          Index group) {
    const auto m = static_cast<Index>(exprs.size());
    switch (spec_.norm) {
      case PerturbationNorm::linf: {  // l1: sum of per-coordinate absolute-value epigraphs
        const Index q = a_.add_variables(name, m, group);
        std::vector<LinearTerm> out;
        for (Index j = 0; j < m; ++j) {
          add_abs_bound(q + j, exprs[static_cast<std::size_t>(j)]);
          out.push_back({q + j, 1.0});
        }
        return out;
      }
      case PerturbationNorm::l1: {  // linf: one bound on every coordinate
        const Index t = a_.add_variables(name, 1, group);
        for (const auto& e : exprs) add_abs_bound(t, e);
        return {{t, 1.0}};
      }
      case PerturbationNorm::l2: {
        const Index t = a_.add_variables(name, 1, group);
        std::vector<AffineRow> rows{AffineRow{{{t, 1.0}}, 0.0}};
        rows.insert(rows.end(), exprs.begin(), exprs.end());
        a_.add_soc(rows);
        return {{t, 1.0}};
      }
    }
    return {};
  }

  // t >= |e|
  void add_abs_bound(Index t, const AffineRow& e) {
    AffineRow plus{{{t, 1.0}}, -e.constant};
    AffineRow minus{{{t, 1.0}}, e.constant};
    for (const auto& term : e.terms) {
      plus.terms.push_back({term.var, -term.coeff});
      minus.terms.push_back({term.var, term.coeff});
    }
    a_.add_nonneg(plus);
    a_.add_nonneg(minus);
  }

  const Dataset& data_;
  const std::vector<ActivationPattern>& patterns_;
  RobustSpec spec_;
  ProgramAssembler a_;
  std::vector<PatternVars> vars_;
  std::vector<Index> perturbed_cols_;
};

void require_binary(const Dataset& data) {
  if (data.task != TaskKind::binary) throw InvalidArgument("hinge programs need binary (+1/-1) targets");
}

ConicProgram hinge_program(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                           const RobustSpec& spec) {
  require_binary(data);
  Builder b(data, patterns, beta, spec);
  ProgramAssembler& a = b.assembler();
  const Index n = data.n();
  const Index s = a.add_variables("slack", n);
  for (Index k = 0; k < n; ++k) a.add_objective(s + k, 1.0 / static_cast<double>(n));
  for (Index k = 0; k < n; ++k) {
    // s_k >= 1 - y_k pred_k + eps * ||.||_q
    AffineRow row{{{s + k, 1.0}}, -1.0};
    for (const auto& t : b.prediction(k).terms) row.terms.push_back({t.var, data.y(k) * t.coeff});
    for (const auto& t : b.sample_norm_bound(k)) row.terms.push_back({t.var, -b.eps() * t.coeff});
    a.add_nonneg(row);
    a.add_nonneg(AffineRow{{{s + k, 1.0}}, 0.0});
  }
  b.add_pattern_constraints();
  b.add_group_norms();
  return b.finish();
}

}  // namespace

ConicProgram build_lp_robust(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                             const RobustSpec& spec) {
  return hinge_program(data, patterns, beta, spec);
}

ConicProgram build_hinge_robust(const Dataset& data, const std::vector<ActivationPattern>& patterns,
                                double beta, const RobustSpec& spec) {
  if (spec.norm != PerturbationNorm::linf) {
    throw InvalidArgument("build_hinge_robust handles the l-infinity ball only; use build_lp_robust");
  }
  return hinge_program(data, patterns, beta, spec);
}

ConicProgram build_squared_robust(const Dataset& data, const std::vector<ActivationPattern>& patterns,
                                  double beta, const RobustSpec& spec) {
  Builder b(data, patterns, beta, spec);
  ProgramAssembler& a = b.assembler();
  const Index n = data.n();
  const Index av = a.add_variables("a", 1);
  const Index z = a.add_variables("z", n + 1);
  a.add_objective(av, 1.0);
  for (Index k = 0; k < n; ++k) {
    // z_k >= |pred_k - y_k| + eps * ||.||_q, as two linear rows
    const AffineRow pred = b.prediction(k);
    const auto bound = b.sample_norm_bound(k);
    for (double sign : {1.0, -1.0}) {
      AffineRow row{{{z + k, 1.0}}, sign * data.y(k)};
      for (const auto& t : pred.terms) row.terms.push_back({t.var, -sign * t.coeff});
      for (const auto& t : bound) row.terms.push_back({t.var, -b.eps() * t.coeff});
      a.add_nonneg(row);
    }
  }
  // z_{n+1} >= |2a - 1/4|
  a.add_nonneg(AffineRow{{{z + n, 1.0}, {av, -2.0}}, 0.25});
  a.add_nonneg(AffineRow{{{z + n, 1.0}, {av, 2.0}}, -0.25});
  // ||z||_2 <= 2a + 1/4
  std::vector<AffineRow> cone{AffineRow{{{av, 2.0}}, 0.25}};
  for (Index k = 0; k <= n; ++k) cone.push_back(AffineRow{{{z + k, 1.0}}, 0.0});
  a.add_soc(cone);
  b.add_pattern_constraints();
  b.add_group_norms();
  return b.finish();
}

ConicProgram build_standard(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                            LossKind loss) {
  const RobustSpec none{};
  if (loss.is_hinge()) return hinge_program(data, patterns, beta, none);
  return build_squared_robust(data, patterns, beta, none);
}

ConicProgram build_program(const Dataset& data, const std::vector<ActivationPattern>& patterns, double beta,
                           LossKind loss, const RobustSpec& spec) {
  if (loss.is_hinge()) return build_lp_robust(data, patterns, beta, spec);
  return build_squared_robust(data, patterns, beta, spec);
}

ConvexSolution decode_solution(const ConicProgram& program, const Vector& raw_primal) {
  if (raw_primal.size() != program.var_count()) {
    std::ostringstream msg;
    msg << "primal has " << raw_primal.size() << " entries, program has " << program.var_count() << " variables";
    throw DimensionError(msg.str());
  }
  ConvexSolution out;
  out.patterns = program.patterns();
  for (std::size_t i = 0; i < out.patterns.size(); ++i) {
    const auto g = static_cast<Index>(i);
    const VariableSpan& v = program.span("v", g);
    const VariableSpan& w = program.span("w", g);
    out.v.push_back(raw_primal.segment(v.first, v.size));
    out.w.push_back(raw_primal.segment(w.first, w.size));
  }
  out.objective = program.objective_value(raw_primal);
  return out;
}

}  // namespace cvxnn

#include "cvxnn/trainer.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>

namespace cvxnn {

using nlohmann::json;

double default_zero_tol(const ConvexSolution& solution) {
  double largest = 0.0;
  for (std::size_t i = 0; i < solution.size(); ++i) {
    largest = std::max({largest, solution.v[i].norm(), solution.w[i].norm()});
  }
  return 1e-8 * (1.0 + largest);
}

NetworkWeights recover_weights(const ConvexSolution& solution, double zero_tol) {
  if (zero_tol < 0.0) zero_tol = default_zero_tol(solution);
  const Index d = solution.v.empty() ? 0 : solution.v.front().size();
  std::vector<Vector> hidden;
  std::vector<double> output;
  for (int side = 0; side < 2; ++side) {
    const auto& group = side == 0 ? solution.v : solution.w;
    for (const Vector& g : group) {
      if (!g.allFinite()) throw InvalidArgument("solution contains NaN or Inf");
      const double norm = g.norm();
      if (norm <= zero_tol) continue;
      const double root = std::sqrt(norm);
      hidden.push_back(g / root);
      output.push_back(side == 0 ? root : -root);
    }
  }
  Matrix u(d, static_cast<Index>(hidden.size()));
  for (std::size_t j = 0; j < hidden.size(); ++j) u.col(static_cast<Index>(j)) = hidden[j];
  return NetworkWeights(std::move(u), Eigen::Map<Vector>(output.data(), static_cast<Index>(output.size())));
}

namespace {

TrainedModel finish_training(const ConicProgram& program, const SolveSettings& settings, TrainMeta meta) {
  const SolveResult r = solve(program, settings);
  if (r.status == SolveStatus::infeasible || r.status == SolveStatus::unbounded) {
    std::ostringstream msg;
    msg << "training program reported " << to_string(r.status) << " after " << r.iterations
        << " iterations (gap " << r.gap << ", violation " << r.max_violation << ")";
    throw TrainingError(msg.str(), r.status);
  }
  TrainedModel model;
  model.convex = decode_solution(program, r.primal);
  model.weights = recover_weights(model.convex);
  meta.status = r.status;
  meta.degraded = !r.optimal();
  meta.iterations = r.iterations;
  meta.gap = r.gap;
  meta.max_violation = r.max_violation;
  meta.m_star = model.weights.width();
  model.meta = meta;
  return model;
}

}  // namespace

TrainedModel train_standard(const Dataset& data, double beta, const SamplerConfig& sampler, LossKind loss,
                            const SolveSettings& settings) {
  const PatternSet set = sample_standard(data.X, sampler);
  TrainMeta meta;
  meta.P_s_requested = sampler.P_s;
  meta.P_s_used = static_cast<Index>(set.size());
  meta.raw_draws = set.raw_draws;
  meta.seed = sampler.seed;
  meta.beta = beta;
  meta.loss = loss;
  return finish_training(build_standard(data, set.patterns, beta, loss), settings, meta);
}

TrainedModel train_adversarial(const Dataset& data, double beta, const RobustSpec& spec,
                               const SamplerConfig& sampler, LossKind loss, const SolveSettings& settings) {
  SamplerConfig config = sampler;
  config.eps = spec.eps;
  const PatternSet set = sample_adversarial(data.X, config);
  TrainMeta meta;
  meta.adversarial = true;
  meta.P_s_requested = sampler.P_s;
  meta.P_s_used = static_cast<Index>(set.size());
  meta.raw_draws = set.raw_draws;
  meta.seed = sampler.seed;
  meta.eps = spec.eps;
  meta.norm = spec.norm;
  meta.beta = beta;
  meta.loss = loss;
  return finish_training(build_program(data, set.patterns, beta, loss, spec), settings, meta);
}

TrainedModel train_adversarial(const Dataset& data, double beta, double eps, const SamplerConfig& sampler,
                               LossKind loss, const SolveSettings& settings) {
  return train_adversarial(data, beta, robust_spec(data, eps), sampler, loss, settings);
}

double pattern_constraint_violation(const ConvexSolution& solution, const Matrix& X) {
  double worst = 0.0;
  for (std::size_t i = 0; i < solution.size(); ++i) {
    const Vector sign = 2.0 * solution.patterns[i].as_vector().array() - 1.0;
    for (const Vector* g : {&solution.v[i], &solution.w[i]}) {
      const Vector margin = sign.cwiseProduct(X * *g);
      worst = std::max(worst, -margin.minCoeff());
    }
  }
  return worst;
}

double cost_equality_residual(const TrainedModel& model, const Dataset& data, double beta, LossKind loss,
                              double tol) {
  const ConvexSolution& s = model.convex;
  const double violation = pattern_constraint_violation(s, data.X);
  if (violation > tol) {
    std::ostringstream msg;
    msg << "pattern constraints violated on X by " << violation << " (tolerance " << tol << ")";
    throw ConstraintViolation(msg.str(), violation);
  }
  Vector pred = Vector::Zero(data.n());
  double norms = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    pred += s.patterns[i].as_vector().cwiseProduct(data.X * (s.v[i] - s.w[i]));
    norms += s.v[i].norm() + s.w[i].norm();
  }
  const double lhs = loss_value(pred, data.y, loss) + beta * norms;
  return std::abs(lhs - regularized_objective(model.weights, data, beta, loss));
}

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

std::string model_to_json(const TrainedModel& model) {
  const TrainMeta& m = model.meta;
  json patterns = json::array();
  json v = json::array();
  json w = json::array();
  for (std::size_t i = 0; i < model.convex.size(); ++i) {
    patterns.push_back(model.convex.patterns[i].mask);
    v.push_back(vector_json(model.convex.v[i]));
    w.push_back(vector_json(model.convex.w[i]));
  }
  json doc;
  doc["weights"] = {{"dim", model.weights.dim()},
                    {"hidden", matrix_json(model.weights.hidden.transpose())},
                    {"output", vector_json(model.weights.output)}};
  doc["convex"] = {{"objective", model.convex.objective}, {"patterns", patterns}, {"v", v}, {"w", w}};
  doc["meta"] = {{"adversarial", m.adversarial},
                 {"P_s_requested", m.P_s_requested},
                 {"P_s_used", m.P_s_used},
                 {"raw_draws", m.raw_draws},
                 {"seed", m.seed},
                 {"eps", m.eps},
                 {"norm", to_string(m.norm)},
                 {"beta", m.beta},
                 {"loss", to_string(m.loss)},
                 {"status", to_string(m.status)},
                 {"degraded", m.degraded},
                 {"iterations", m.iterations},
                 {"gap", m.gap},
                 {"max_violation", m.max_violation},
                 {"m_star", m.m_star}};
  return doc.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  const json doc = json::parse(text);
  TrainedModel model;
  const json& wj = doc.at("weights");
  const Index dim = wj.at("dim").get<Index>();
  const json& hidden = wj.at("hidden");
  Matrix u(dim, static_cast<Index>(hidden.size()));
  for (std::size_t j = 0; j < hidden.size(); ++j) u.col(static_cast<Index>(j)) = json_vector(hidden[j]);
  model.weights = NetworkWeights(std::move(u), json_vector(wj.at("output")));

  const json& cj = doc.at("convex");
  model.convex.objective = cj.at("objective").get<double>();
  for (const auto& p : cj.at("patterns")) {
    ActivationPattern pat;
    pat.mask = p.get<std::vector<std::uint8_t>>();
    model.convex.patterns.push_back(std::move(pat));
  }
  for (const auto& x : cj.at("v")) model.convex.v.push_back(json_vector(x));
  for (const auto& x : cj.at("w")) model.convex.w.push_back(json_vector(x));

  const json& mj = doc.at("meta");
  TrainMeta& m = model.meta;
  m.adversarial = mj.at("adversarial").get<bool>();
  m.P_s_requested = mj.at("P_s_requested").get<Index>();
  m.P_s_used = mj.at("P_s_used").get<Index>();
  m.raw_draws = mj.at("raw_draws").get<Index>();
  m.seed = mj.at("seed").get<std::uint64_t>();
  m.eps = mj.at("eps").get<double>();
  m.norm = norm_from_string(mj.at("norm").get<std::string>());
  m.beta = mj.at("beta").get<double>();
  m.loss = loss_from_string(mj.at("loss").get<std::string>());
  const std::string status = mj.at("status").get<std::string>();
  for (SolveStatus s : {SolveStatus::optimal, SolveStatus::max_iter, SolveStatus::infeasible, SolveStatus::unbounded}) {
    if (to_string(s) == status) m.status = s;
  }
  m.degraded = mj.at("degraded").get<bool>();
  m.iterations = mj.at("iterations").get<Index>();
  m.gap = mj.at("gap").get<double>();
  m.max_violation = mj.at("max_violation").get<double>();
  m.m_star = mj.at("m_star").get<Index>();
  return model;
}

}  // namespace cvxnn

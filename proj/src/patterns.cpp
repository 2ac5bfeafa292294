#include "cvxnn/patterns.hpp"

#include "cvxnn/conic_program.hpp"
#include "cvxnn/random.hpp"
#include "cvxnn/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

namespace cvxnn {

using nlohmann::json;

void SamplerConfig::validate(bool adversarial) const {
  if (P_s < 1) throw InvalidArgument("P_s must be >= 1");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be finite and >= 0");
  if (adversarial) {
    if (P_a < 1 || S < 1) throw InvalidArgument("P_a and S must be >= 1");
    if (P_a * S < P_s) throw InvalidArgument("adversarial sampling needs P_a * S >= P_s");
  }
}

ActivationPattern pattern_from_direction(const Matrix& X, const Vector& a) {
  if (a.size() != X.cols()) throw DimensionError("direction length does not match data dimension");
  if (!a.allFinite()) throw InvalidArgument("direction must be finite");
  const Vector scores = X * a;
  ActivationPattern p;
  p.mask.resize(static_cast<std::size_t>(X.rows()));
  for (Index k = 0; k < X.rows(); ++k) p.mask[static_cast<std::size_t>(k)] = scores(k) >= 0.0 ? 1 : 0;
  return p;
}

Vector sample_direction(std::uint64_t seed, Index dim, Index draw) {
  Engine rng = StreamFactory(seed).stream({0, static_cast<std::uint64_t>(draw)});
  Vector a(dim);
  for (Index j = 0; j < dim; ++j) a(j) = standard_normal(rng);
  return a;
}

Matrix perturbed_matrix(const Matrix& X, double eps, std::uint64_t seed, Index draw, Index perturbation) {
  Engine rng = StreamFactory(seed).stream({1, static_cast<std::uint64_t>(draw),
                                           static_cast<std::uint64_t>(perturbation)});
  Matrix out = X;
  // Column-major fill keeps the draw order independent of Eigen's storage flags.
  for (Index c = 0; c < X.cols(); ++c) {
    for (Index r = 0; r < X.rows(); ++r) {
      const double g = standard_normal(rng);
      out(r, c) += eps * static_cast<double>((g > 0.0) - (g < 0.0));
    }
  }
  return out;
}

ActivationPattern replay_witness(const Matrix& X, const PatternSet& set, std::size_t index) {
  const PatternWitness& w = set.witnesses.at(index);
  if (w.perturbation == 0) return pattern_from_direction(X, w.direction);
  return pattern_from_direction(perturbed_matrix(X, set.eps, set.seed, w.draw, w.perturbation), w.direction);
}

Index draw_cap(const SamplerConfig& config) { return 50 * config.P_s; }

namespace {

struct Collector {
  PatternSet out;
  std::set<std::vector<std::uint8_t>> seen;
  Index target;

  bool full() const { return static_cast<Index>(out.patterns.size()) >= target; }

  void offer(ActivationPattern p, PatternWitness w) {
    if (full() || !seen.insert(p.mask).second) return;
    out.patterns.push_back(std::move(p));
    out.witnesses.push_back(std::move(w));
  }
};

}  // namespace

PatternSet sample_standard(const Matrix& X, const SamplerConfig& config) {
  config.validate(false);
  Collector c{{}, {}, config.P_s};
  c.out.seed = config.seed;
  c.out.requested = config.P_s;
  const Index cap = draw_cap(config);
  Index draw = 0;
  for (; draw < cap && !c.full(); ++draw) {
    Vector a = sample_direction(config.seed, X.cols(), draw);
    ActivationPattern p = pattern_from_direction(X, a);
    c.offer(std::move(p), PatternWitness{std::move(a), draw, 0});
  }
  c.out.raw_draws = draw;
  return std::move(c.out);
}

PatternSet sample_adversarial(const Matrix& X, const SamplerConfig& config) {
  config.validate(true);
  Collector c{{}, {}, config.P_s};
  c.out.seed = config.seed;
  c.out.eps = config.eps;
  c.out.requested = config.P_s;
  const Index cap = draw_cap(config);
  Index raw = 0;
  for (Index i = 0; i < config.P_a && raw < cap && !c.full(); ++i) {
    const Vector a = sample_direction(config.seed, X.cols(), i);
    for (Index j = 0; j < config.S && raw < cap && !c.full(); ++j, ++raw) {
      if (j == 0) {
        c.offer(pattern_from_direction(X, a), PatternWitness{a, i, 0});
      } else {
        c.offer(pattern_from_direction(perturbed_matrix(X, config.eps, config.seed, i, j), a),
                PatternWitness{a, i, j});
      }
    }
  }
  c.out.raw_draws = raw;
  return std::move(c.out);
}

namespace {

// Is there u with x_k.u >= 0 on kept rows and x_k.u <= -1 on dropped rows (the
// first `prefix` rows only)? Solved as min t with both sides relaxed by t >= 0.
bool prefix_feasible(const Matrix& X, const std::vector<std::uint8_t>& mask, std::size_t prefix) {
  ProgramAssembler a;
  const Index u = a.add_variables("u", X.cols());
  const Index t = a.add_variables("t", 1);
  a.add_objective(t, 1.0);
  a.add_nonneg(AffineRow{{{t, 1.0}}, 0.0});
  for (std::size_t k = 0; k < prefix; ++k) {
    AffineRow row{{{t, 1.0}}, 0.0};
    const double sign = mask[k] ? 1.0 : -1.0;
    for (Index j = 0; j < X.cols(); ++j) {
      const double x = X(static_cast<Index>(k), j);
      if (x != 0.0) row.terms.push_back({u + j, sign * x});
    }
    if (!mask[k]) row.constant = -1.0;
    a.add_nonneg(row);
  }
  const SolveResult r = solve(a.finish());
  if (r.status != SolveStatus::optimal) throw std::runtime_error("pattern feasibility LP failed");
  return r.objective <= 1e-6;
}

void extend(const Matrix& X, std::vector<std::uint8_t>& mask, std::size_t depth,
            std::vector<ActivationPattern>& out) {
  if (depth == mask.size()) {
    ActivationPattern p;
    p.mask = mask;
    out.push_back(std::move(p));
    return;
  }
  // Ordering 0 before 1 at every depth yields masks in lexicographic order.
  for (std::uint8_t bit : {std::uint8_t{0}, std::uint8_t{1}}) {
    mask[depth] = bit;
    if (prefix_feasible(X, mask, depth + 1)) extend(X, mask, depth + 1, out);
  }
}

}  // namespace

std::vector<ActivationPattern> enumerate_all_patterns(const Matrix& X, Index max_n) {
  if (X.rows() > max_n) {
    std::ostringstream msg;
    msg << "exhaustive enumeration limited to n <= " << max_n << ", got " << X.rows();
    throw InvalidArgument(msg.str());
  }
  if (!X.allFinite()) throw InvalidArgument("data contains NaN or Inf");
  // A prefix that admits no direction cannot be completed, so the search only
  // descends into achievable branches instead of testing all 2^n masks.
  std::vector<ActivationPattern> out;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(X.rows()), 0);
  extend(X, mask, 0, out);
  return out;
}

double pattern_count_bound(Index n, Index r) {
  if (n < 2 || r < 1) throw InvalidArgument("pattern_count_bound needs n >= 2 and r >= 1");
  const double rr = static_cast<double>(r);
  return 2.0 * rr * std::pow(std::exp(1.0) * static_cast<double>(n - 1) / rr, rr);
}

Index min_sample_count(Index n, double psi, double xi) {
  if (!(psi > 0.0 && psi < 1.0) || !(xi > 0.0 && xi < 1.0)) {
    throw InvalidArgument("confidence constants must lie in (0, 1)");
  }
  if (n < 1) throw InvalidArgument("n must be >= 1");
  const double value = static_cast<double>(n + 1) / (psi * xi) - 1.0;
  // Absorb rounding in psi*xi so exact integers do not round up.
  return static_cast<Index>(std::ceil(value - 1e-9 * std::max(1.0, value)));
}

std::string pattern_set_to_json(const PatternSet& set) {
  json masks = json::array();
  json witnesses = json::array();
  for (std::size_t i = 0; i < set.patterns.size(); ++i) {
    masks.push_back(set.patterns[i].mask);
    const PatternWitness& w = set.witnesses[i];
    witnesses.push_back({{"direction", std::vector<double>(w.direction.data(), w.direction.data() + w.direction.size())},
                         {"draw", w.draw},
                         {"perturbation", w.perturbation}});
  }
  json doc = {{"seed", set.seed},           {"eps", set.eps},       {"requested", set.requested},
              {"raw_draws", set.raw_draws}, {"masks", masks},       {"witnesses", witnesses}};
  return doc.dump(1);
}

PatternSet pattern_set_from_json(const std::string& text) {
  const json doc = json::parse(text);
  PatternSet set;
  set.seed = doc.at("seed").get<std::uint64_t>();
  set.eps = doc.at("eps").get<double>();
  set.requested = doc.at("requested").get<Index>();
  set.raw_draws = doc.at("raw_draws").get<Index>();
  for (const auto& m : doc.at("masks")) {
    ActivationPattern p;
    p.mask = m.get<std::vector<std::uint8_t>>();
    set.patterns.push_back(std::move(p));
  }
  for (const auto& w : doc.at("witnesses")) {
    const auto dir = w.at("direction").get<std::vector<double>>();
    set.witnesses.push_back(PatternWitness{Eigen::Map<const Vector>(dir.data(), static_cast<Index>(dir.size())),
                                           w.at("draw").get<Index>(), w.at("perturbation").get<Index>()});
  }
  if (set.witnesses.size() != set.patterns.size()) throw InvalidArgument("pattern JSON: mask/witness count mismatch");
  return set;
}

}  // namespace cvxnn

#pragma once

#include "cvxnn/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cvxnn {

struct SamplerConfig {
  Index P_s = 1;
  Index P_a = 1;
  Index S = 1;
  std::uint64_t seed = 0;
  double eps = 0.0;

  void validate(bool adversarial) const;
};

/// How a pattern was produced: direction `direction` (draw number `draw`) applied to
/// X itself when `perturbation == 0`, otherwise to X + eps * sgn(R) with R drawn from
/// the substream (1, draw, perturbation).
struct PatternWitness {
  Vector direction;
  Index draw = 0;
  Index perturbation = 0;
};

struct PatternSet {
  std::vector<ActivationPattern> patterns;
  std::vector<PatternWitness> witnesses;
  std::uint64_t seed = 0;
  double eps = 0.0;
  Index raw_draws = 0;
  Index requested = 0;

  std::size_t size() const { return patterns.size(); }
  Index shortfall() const { return requested - static_cast<Index>(patterns.size()); }
};

/// mask_k = [x_k . a >= 0]
ActivationPattern pattern_from_direction(const Matrix& X, const Vector& a);

/// Direction for draw i; shared by both samplers so their streams line up.
Vector sample_direction(std::uint64_t seed, Index dim, Index draw);
/// X + eps * sgn(R) for the (draw, perturbation) substream.
Matrix perturbed_matrix(const Matrix& X, double eps, std::uint64_t seed, Index draw, Index perturbation);
/// Rebuilds the matrix a witness was evaluated on and returns the pattern it induces.
ActivationPattern replay_witness(const Matrix& X, const PatternSet& set, std::size_t index);

/// Maximum raw draws either sampler attempts before giving up on reaching P_s.
Index draw_cap(const SamplerConfig& config);

PatternSet sample_standard(const Matrix& X, const SamplerConfig& config);
PatternSet sample_adversarial(const Matrix& X, const SamplerConfig& config);

/// Every mask achievable by some direction. Exponential; refuses n > max_n.
std::vector<ActivationPattern> enumerate_all_patterns(const Matrix& X, Index max_n = 15);

/// 2r (e(n-1)/r)^r
double pattern_count_bound(Index n, Index r);
/// ceil((n+1)/(psi*xi) - 1)
Index min_sample_count(Index n, double psi, double xi);

std::string pattern_set_to_json(const PatternSet& set);
PatternSet pattern_set_from_json(const std::string& text);

}  // namespace cvxnn

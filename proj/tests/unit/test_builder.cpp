#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cvxnn/patterns.hpp"
#include "cvxnn/program_builder.hpp"
#include "cvxnn/serialization.hpp"
#include "cvxnn/solver.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace cvxnn;

namespace {

double optimum(const ConicProgram& p) {
  const SolveResult r = solve(p);
  REQUIRE(r.optimal());
  return r.objective;
}

Dataset random_binary(Engine& rng, Index n, Index d) {
  return make_dataset(oracle::gaussian(rng, n, d), oracle::labels(rng, n), TaskKind::binary);
}

std::vector<ActivationPattern> sampled(const Matrix& X, Index count, std::uint64_t seed) {
  return sample_standard(X, SamplerConfig{count, 1, 1, seed, 0.0}).patterns;
}

ActivationPattern all_ones(Index n) { return ActivationPattern(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 1)); }

}  // namespace

TEST_CASE("one-sample hinge program matches a grid search") {
  const Dataset data = make_dataset(Matrix::Ones(1, 1), Vector::Ones(1), TaskKind::binary);
  const double got = optimum(build_standard(data, {all_ones(1)}, 0.1, LossKind::hinge()));
  double best = INFINITY;
  for (int i = 0; i <= 6000; ++i) {
    for (int j = 0; j <= 6000; j += 10) {
      const double v = -3.0 + i * 1e-3, w = -3.0 + j * 1e-3;
      if (v < 0.0 || w < 0.0) continue;  // (2D - I) X v >= 0 with D = I, X = 1
      best = std::min(best, oracle::relu(1.0 - (v - w)) + 0.1 * (std::abs(v) + std::abs(w)));
    }
  }
  CHECK(std::abs(got - best) <= 1e-4);
}

TEST_CASE("hinge program layout and the zero point") {
  Engine rng = StreamFactory(21).stream({0});
  const Dataset data = random_binary(rng, 7, 3);
  const auto patterns = sampled(data.X, 4, 1);
  const ConicProgram p = build_standard(data, patterns, 0.01, LossKind::hinge());
  CHECK(p.var_count() == static_cast<Index>(patterns.size()) * (2 * 3 + 2) + 7);
  Vector z = Vector::Zero(p.var_count());
  PointCheck at_zero = check_point(p, z);
  CHECK(at_zero.objective == 0.0);
  CHECK(at_zero.max_violation == 1.0);
  const VariableSpan& s = p.span("slack");
  z.segment(s.first, s.size).setOnes();
  at_zero = check_point(p, z);
  CHECK(at_zero.objective == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(at_zero.max_violation == 0.0);
}

TEST_CASE("check_point reports hand-computed shifts around an optimum") {
  const Dataset data = make_dataset(Matrix::Ones(1, 1), Vector::Ones(1), TaskKind::binary);
  const ConicProgram p = build_standard(data, {all_ones(1)}, 0.1, LossKind::hinge());
  const SolveResult r = solve(p);
  REQUIRE(r.optimal());
  // Optimum: v = 1, w = 0, b = 1, c = 0, slack = 0, objective 0.1.
  CHECK(r.primal(p.span("v", 0).first) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.max_violation <= 1e-8);
  Vector up = r.primal, down = r.primal;
  up(p.span("v", 0).first) += 0.1;    // ||v|| exceeds b by 0.1
  down(p.span("v", 0).first) -= 0.1;  // the slack row falls short by 0.1
  CHECK(check_point(p, up).max_violation == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(check_point(p, down).max_violation == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(check_point(p, up).objective == doctest::Approx(r.objective).epsilon(1e-14));
  CHECK_THROWS_AS(check_point(p, Vector::Zero(2)), DimensionError);
}

TEST_CASE("interior point agrees with the first-order reference on a small hinge program") {
  SolveSettings admm;
  admm.algorithm = SolverAlgorithm::operator_splitting;
  admm.tol_gap = admm.tol_feas = 1e-8;
  admm.max_iter = 400000;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Engine rng = StreamFactory(22).stream({seed});
    const Dataset data = random_binary(rng, 4, 2);
    const ConicProgram p = build_standard(data, sampled(data.X, 3, seed), 0.05, LossKind::hinge());
    const SolveResult ipm = solve(p);
    const SolveResult ref = solve(p, admm);
    REQUIRE(ipm.optimal());
    CHECK(std::abs(ipm.objective - ref.objective) <= 1e-4);
  }
}

TEST_CASE("two-sample robust hinge program matches a grid search") {
  // x = (1, -1), y = (1, 1), patterns (1,0) and (0,1), eps = 0.5: v_1 = 2, v_2 = -2.
  Matrix X(2, 1);
  X << 1.0, -1.0;
  const Dataset data = make_dataset(X, Vector::Ones(2), TaskKind::binary);
  const std::vector<ActivationPattern> patterns{ActivationPattern({1, 0}), ActivationPattern({0, 1})};
  const double beta = 0.01, eps = 0.5;
  const double got = optimum(build_hinge_robust(data, patterns, beta, RobustSpec{eps}));
  auto feasible = [&](std::size_t i, double u) {
    for (Index k = 0; k < 2; ++k) {
      const double s = patterns[i].active(k) ? 1.0 : -1.0;
      if (s * X(k, 0) * u < eps * std::abs(u) - 1e-12) return false;
    }
    return true;
  };
  double best = INFINITY;
  const int steps = 100;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c)
        for (int e = 0; e <= steps; ++e) {
          const double v1 = -2.5 + 0.05 * a, w1 = -2.5 + 0.05 * b, v2 = -2.5 + 0.05 * c, w2 = -2.5 + 0.05 * e;
          if (!feasible(0, v1) || !feasible(0, w1) || !feasible(1, v2) || !feasible(1, w2)) continue;
          double obj = beta * (std::abs(v1) + std::abs(w1) + std::abs(v2) + std::abs(w2));
          const double g1 = v1 - w1, g2 = v2 - w2;
          obj += 0.5 * oracle::relu(1.0 - X(0, 0) * g1 + eps * std::abs(g1));
          obj += 0.5 * oracle::relu(1.0 - X(1, 0) * g2 + eps * std::abs(g2));
          best = std::min(best, obj);
        }
  CHECK(std::abs(got - best) <= 1e-3);
  CHECK(got == doctest::Approx(4.0 * beta).epsilon(1e-6));
}

TEST_CASE("l2 ball robust hinge matches a grid search") {
  Matrix X(2, 2);
  X << 1.0, 0.5, 1.0, -0.5;
  const Dataset data = make_dataset(X, Vector::Ones(2), TaskKind::binary);
  const double beta = 0.01, eps = 0.5;
  const double got = optimum(build_lp_robust(data, {all_ones(2)}, beta, RobustSpec{eps, PerturbationNorm::l2, {}}));
  double best = INFINITY;
  const int steps = 60;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c)
        for (int e = 0; e <= steps; ++e) {
          const Vector v = (Vector(2) << -3.0 + 0.1 * a, -3.0 + 0.1 * b).finished();
          const Vector w = (Vector(2) << -3.0 + 0.1 * c, -3.0 + 0.1 * e).finished();
          bool ok = true;
          for (Index k = 0; k < 2; ++k) {
            ok = ok && X.row(k).dot(v) >= eps * v.norm() - 1e-12 && X.row(k).dot(w) >= eps * w.norm() - 1e-12;
          }
          if (!ok) continue;
          double obj = beta * (v.norm() + w.norm());
          for (Index k = 0; k < 2; ++k) obj += 0.5 * oracle::relu(1.0 - X.row(k).dot(v - w) + eps * (v - w).norm());
          best = std::min(best, obj);
        }
  CHECK(std::abs(got - best) <= 1e-3);
}

TEST_CASE("robust programs at eps = 0 reduce to the standard ones") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Engine rng = StreamFactory(23).stream({seed});
    const Dataset data = random_binary(rng, 8, 3);
    const auto patterns = sampled(data.X, 5, seed);
    const double base = optimum(build_standard(data, patterns, 0.02, LossKind::hinge()));
    CHECK(optimum(build_hinge_robust(data, patterns, 0.02, RobustSpec{0.0})) == doctest::Approx(base).epsilon(1e-6));
    for (auto norm : {PerturbationNorm::l1, PerturbationNorm::l2, PerturbationNorm::linf}) {
      CHECK(std::abs(optimum(build_lp_robust(data, patterns, 0.02, RobustSpec{0.0, norm, {}})) - base) <= 1e-6);
    }
    const Dataset reg = make_dataset(data.X, oracle::gaussian(rng, 8), TaskKind::regression);
    const double sq = optimum(build_standard(reg, patterns, 0.02, LossKind::squared()));
    CHECK(std::abs(optimum(build_squared_robust(reg, patterns, 0.02, RobustSpec{0.0})) - sq) <= 1e-6);
  }
}

TEST_CASE("l-infinity lp builder is the hinge robust builder") {
  Engine rng = StreamFactory(24).stream({0});
  const Dataset data = random_binary(rng, 6, 2);
  const auto patterns = sampled(data.X, 4, 2);
  const ConicProgram a = build_hinge_robust(data, patterns, 0.01, RobustSpec{0.2});
  const ConicProgram b = build_lp_robust(data, patterns, 0.01, RobustSpec{0.2, PerturbationNorm::linf, {}});
  CHECK(program_to_json(a) == program_to_json(b));
  CHECK_THROWS_AS(build_hinge_robust(data, patterns, 0.01, RobustSpec{0.2, PerturbationNorm::l2, {}}), InvalidArgument);
}

TEST_CASE("robust pattern rows equal the vertex minimum over the box") {
  Engine rng = StreamFactory(25).stream({0});
  for (int rep = 0; rep < 50; ++rep) {
    const Index d = 1 + rep % 8, n = 5;
    const Dataset data = random_binary(rng, n, d);
    const ActivationPattern pattern = pattern_from_direction(data.X, oracle::gaussian(rng, d));
    const double eps = uniform(rng, 0.0, 0.5);
    const ConicProgram p = build_hinge_robust(data, {pattern}, 0.1, RobustSpec{eps});
    const Vector v = oracle::gaussian(rng, d);
    Vector z = Vector::Zero(p.var_count());
    z.segment(p.span("v", 0).first, d) = v;
    z.segment(p.span("v_norm", 0).first, d) = v.cwiseAbs();
    const Vector rows = p.nonneg_matrix() * z + p.nonneg_offset();
    // Per-sample blocks come first (2d absolute-value rows and 2 hinge rows each),
    // then the 2d rows bounding |v| and the n pattern rows for v.
    const Index first = n * (2 * d + 2) + 2 * d;
    for (Index k = 0; k < n; ++k) {
      const double s = pattern.active(k) ? 1.0 : -1.0;
      double vmin = INFINITY;
      oracle::for_each_vertex(d, eps, [&](const Vector& delta) {
        vmin = std::min(vmin, s * (data.X.row(k).transpose() + delta).dot(v));
      });
      CHECK(std::abs(rows(first + k) - vmin) <= 1e-12 * (1.0 + std::abs(vmin)));
    }
  }
}

TEST_CASE("robust optimum decodes to points satisfying the robust constraints") {
  Engine rng = StreamFactory(26).stream({0});
  const Dataset data = random_binary(rng, 10, 2);
  const auto patterns = sampled(data.X, 6, 3);
  const double eps = 0.1;
  const ConicProgram p = build_hinge_robust(data, patterns, 0.01, RobustSpec{eps});
  const SolveResult r = solve(p);
  REQUIRE(r.optimal());
  const ConvexSolution sol = decode_solution(p, r.primal);
  for (std::size_t i = 0; i < sol.size(); ++i) {
    for (const Vector* u : {&sol.v[i], &sol.w[i]}) {
      const Vector lhs = (2.0 * sol.patterns[i].as_vector().array() - 1.0).matrix().cwiseProduct(data.X * *u);
      CHECK(lhs.minCoeff() - eps * u->lpNorm<1>() >= -1e-7);
    }
  }
}

TEST_CASE("squared program with zero targets has the zero certificate") {
  Engine rng = StreamFactory(27).stream({0});
  const Dataset data = make_dataset(oracle::gaussian(rng, 5, 2), Vector::Zero(5), TaskKind::regression);
  const ConicProgram p = build_squared_robust(data, sampled(data.X, 3, 1), 0.1, RobustSpec{0.0});
  Vector z = Vector::Zero(p.var_count());
  z(p.span("z").first + 5) = 0.25;
  const PointCheck c = check_point(p, z);
  CHECK(c.objective == 0.0);
  CHECK(c.max_violation == 0.0);
  CHECK(std::abs(optimum(p)) <= 1e-7);
}

TEST_CASE("squared program epigraph chain replays at the optimum") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Engine rng = StreamFactory(28).stream({seed});
    const Dataset data = make_dataset(oracle::gaussian(rng, 9, 2), oracle::gaussian(rng, 9), TaskKind::regression);
    const auto patterns = sampled(data.X, 5, seed);
    const double eps = 0.1 * static_cast<double>(seed);
    const ConicProgram p = build_squared_robust(data, patterns, 0.01, RobustSpec{eps});
    const SolveResult r = solve(p);
    REQUIRE(r.optimal());
    const ConvexSolution sol = decode_solution(p, r.primal);
    const double a = r.primal(p.span("a").first);
    const Vector z = r.primal.segment(p.span("z").first, 10);
    double fit = 0.0;
    for (Index k = 0; k < 9; ++k) {
      double pred = 0.0;
      Vector g = Vector::Zero(2);
      for (std::size_t i = 0; i < sol.size(); ++i) {
        if (!sol.patterns[i].active(k)) continue;
        pred += data.X.row(k).dot(sol.v[i] - sol.w[i]);
        g += sol.v[i] - sol.w[i];
      }
      const double need = std::abs(pred - data.y(k)) + eps * g.lpNorm<1>();
      CHECK(z(k) == doctest::Approx(need).epsilon(1e-8).scale(1.0));
      fit += need * need;
    }
    CHECK(z(9) == doctest::Approx(std::abs(2.0 * a - 0.25)).epsilon(1e-8).scale(1.0));
    CHECK(a == doctest::Approx(0.5 * fit).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("adding patterns never raises the optimum") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Engine rng = StreamFactory(29).stream({seed});
    const Dataset bin = random_binary(rng, 8, 2);
    const Dataset reg = make_dataset(bin.X, oracle::gaussian(rng, 8), TaskKind::regression);
    const auto small = sampled(bin.X, 3, seed);
    auto large = small;
    for (const auto& p : sampled(bin.X, 8, seed + 100))
      if (std::find(large.begin(), large.end(), p) == large.end()) large.push_back(p);
    const RobustSpec spec{0.1};
    const double tol = 2e-8;
    CHECK(optimum(build_standard(bin, large, 0.01, LossKind::hinge())) <=
          optimum(build_standard(bin, small, 0.01, LossKind::hinge())) + tol);
    CHECK(optimum(build_hinge_robust(bin, large, 0.01, spec)) <= optimum(build_hinge_robust(bin, small, 0.01, spec)) + tol);
    CHECK(optimum(build_squared_robust(reg, large, 0.01, spec)) <=
          optimum(build_squared_robust(reg, small, 0.01, spec)) + tol);
    const RobustSpec l2{0.1, PerturbationNorm::l2, {}};
    CHECK(optimum(build_lp_robust(bin, large, 0.01, l2)) <= optimum(build_lp_robust(bin, small, 0.01, l2)) + tol);
  }
}

TEST_CASE("robust optima are nondecreasing in eps") {
  Engine rng = StreamFactory(30).stream({0});
  const Dataset bin = random_binary(rng, 8, 2);
  const Dataset reg = make_dataset(bin.X, oracle::gaussian(rng, 8), TaskKind::regression);
  const auto patterns = sampled(bin.X, 6, 1);
  for (auto norm : {PerturbationNorm::l1, PerturbationNorm::l2, PerturbationNorm::linf}) {
    double last_h = -1.0, last_s = -1.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.4}) {
      const double h = optimum(build_lp_robust(bin, patterns, 0.01, RobustSpec{eps, norm, {}}));
      const double s = optimum(build_squared_robust(reg, patterns, 0.01, RobustSpec{eps, norm, {}}));
      CHECK(h >= last_h - 2e-8);
      CHECK(s >= last_s - 2e-8);
      last_h = h;
      last_s = s;
    }
  }
}

TEST_CASE("decode round-trips and replays the objective") {
  Engine rng = StreamFactory(31).stream({0});
  const Dataset data = random_binary(rng, 6, 3);
  const auto patterns = sampled(data.X, 4, 5);
  const ConicProgram p = build_hinge_robust(data, patterns, 0.03, RobustSpec{0.1});
  const ConvexSolution zero = decode_solution(p, Vector::Zero(p.var_count()));
  for (std::size_t i = 0; i < zero.size(); ++i) CHECK((zero.v[i].isZero(0.0) && zero.w[i].isZero(0.0)));
  const Vector z = oracle::gaussian(rng, p.var_count());
  const ConvexSolution sol = decode_solution(p, z);
  double replay = 0.0;
  for (std::size_t i = 0; i < sol.size(); ++i) {
    const auto g = static_cast<Index>(i);
    CHECK(sol.v[i] == z.segment(p.span("v", g).first, 3));
    CHECK(sol.w[i] == z.segment(p.span("w", g).first, 3));
    replay += 0.03 * (z(p.span("b", g).first) + z(p.span("c", g).first));
  }
  const VariableSpan& s = p.span("slack");
  for (Index k = 0; k < s.size; ++k) replay += z(s.first + k) / 6.0;
  CHECK(std::abs(sol.objective - replay) <= 1e-10);
  CHECK_THROWS_AS(decode_solution(p, Vector::Zero(3)), DimensionError);
}

TEST_CASE("builder argument checks") {
  Engine rng = StreamFactory(32).stream({0});
  const Dataset data = random_binary(rng, 4, 2);
  const auto patterns = sampled(data.X, 2, 1);
  CHECK_THROWS_AS(build_standard(data, {}, 0.1, LossKind::hinge()), InvalidArgument);
  CHECK_THROWS_AS(build_standard(data, patterns, 0.0, LossKind::hinge()), InvalidArgument);
  const Dataset reg = make_dataset(data.X, oracle::gaussian(rng, 4), TaskKind::regression);
  CHECK_THROWS_AS(build_standard(reg, patterns, 0.1, LossKind::hinge()), InvalidArgument);
  CHECK_THROWS_AS(build_hinge_robust(data, patterns, 0.1, RobustSpec{-0.1}), InvalidArgument);
  CHECK_THROWS_AS(norm_from_string("3"), InvalidArgument);
}

TEST_CASE("frozen bias column is left out of the dual norms") {
  Engine rng = StreamFactory(33).stream({0});
  const Dataset data = append_bias(random_binary(rng, 6, 2));
  const auto patterns = sampled(data.X, 4, 1);
  const RobustSpec frozen = robust_spec(data, 0.1, PerturbationNorm::linf, true);
  const ConicProgram p = build_hinge_robust(data, patterns, 0.01, frozen);
  CHECK(p.span("v_norm", 0).size == 2);
  CHECK(build_hinge_robust(data, patterns, 0.01, robust_spec(data, 0.1)).span("v_norm", 0).size == 3);
  CHECK(optimum(p) <= optimum(build_hinge_robust(data, patterns, 0.01, robust_spec(data, 0.1))) + 2e-8);
}

TEST_CASE("programs round-trip through JSON") {
  Engine rng = StreamFactory(34).stream({0});
  const Dataset data = random_binary(rng, 5, 2);
  const ConicProgram p = build_lp_robust(data, sampled(data.X, 3, 1), 0.01, RobustSpec{0.1, PerturbationNorm::l2, {}});
  const std::string text = program_to_json(p);
  const ConicProgram back = program_from_json_string(text);
  CHECK(program_to_json(back) == text);
  CHECK(solve(back).objective == solve(p).objective);
  CHECK_THROWS(program_from_json_string(R"({"var_count": 1})"));
}

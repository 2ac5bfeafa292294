#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cvxnn/attacks.hpp"
#include "cvxnn/patterns.hpp"
#include "cvxnn/program_builder.hpp"
#include "cvxnn/solver.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <sstream>

using namespace cvxnn;

namespace {

NetworkWeights random_net(Engine& rng, Index d, Index m) {
  return NetworkWeights(oracle::gaussian(rng, d, m), oracle::gaussian(rng, m));
}

double loss_at(const NetworkWeights& w, const Vector& x, double y, LossKind loss) {
  Matrix row = x.transpose();
  return sample_loss(forward(w, row)(0), y, loss, 1);
}

ConvexSolution random_solution(Engine& rng, const Matrix& X, int groups) {
  ConvexSolution s;
  for (int i = 0; i < groups; ++i) {
    s.patterns.push_back(pattern_from_direction(X, oracle::gaussian(rng, X.cols())));
    s.v.push_back(oracle::gaussian(rng, X.cols()));
    s.w.push_back(oracle::gaussian(rng, X.cols()));
  }
  return s;
}

}  // namespace

TEST_CASE("FGSM on a single hinge neuron") {
  const NetworkWeights w((Matrix(2, 1) << 1.0, 0.0).finished(), Vector::Ones(1));
  AttackConfig c;
  c.eps = 0.1;
  const Vector x = (Vector(2) << 0.5, 0.2).finished();
  const Vector adv = fgsm(w, x, 1.0, c, LossKind::hinge());
  CHECK(adv(0) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(adv(1) == 0.2);
}

TEST_CASE("zero network is a fixed point of both attacks") {
  const NetworkWeights zero(Matrix::Zero(3, 4), Vector::Zero(4));
  Engine rng = StreamFactory(50).stream({0});
  AttackConfig c;
  c.eps = 0.3;
  for (int rep = 0; rep < 10; ++rep) {
    const Vector x = oracle::gaussian(rng, 3);
    for (auto loss : {LossKind::hinge(), LossKind::squared()}) {
      CHECK(fgsm(zero, x, 1.0, c, loss) == x);
      CHECK(pgd(zero, x, -1.0, c, loss) == x);
    }
  }
  CHECK(fgsm(NetworkWeights::empty(3), Vector::Ones(3), 1.0, c, LossKind::hinge()) == Vector::Ones(3));
}

TEST_CASE("squared-loss FGSM direction follows finite differences") {
  Engine rng = StreamFactory(51).stream({0});
  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const NetworkWeights w = random_net(rng, 3, 5);
    const Vector x = oracle::gaussian(rng, 3);
    const double y = oracle::gaussian(rng, 1)(0);
    // Skip points within 1e-4 of a ReLU kink.
    if ((w.hidden.transpose() * x).cwiseAbs().minCoeff() < 1e-4) continue;
    AttackConfig c;
    c.eps = 0.01;
    const Vector step = fgsm(w, x, y, c, LossKind::squared()) - x;
    for (Index j = 0; j < 3; ++j) {
      const double fd = oracle::central_difference(
          [&](const Vector& z) { return loss_at(w, z, y, LossKind::squared()); }, x, j);
      if (std::abs(fd) < 1e-6) continue;
      CHECK(step(j) == doctest::Approx(0.01 * oracle::sgn(fd)).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("PGD stays inside the box and FGSM is one PGD step") {
  Engine rng = StreamFactory(52).stream({0});
  for (int rep = 0; rep < 100; ++rep) {
    const Index d = 1 + rep % 5;
    const NetworkWeights w = random_net(rng, d, 6);
    const Vector x = oracle::gaussian(rng, d);
    const LossKind loss = rep % 2 ? LossKind::hinge() : LossKind::squared();
    const double y = loss.is_hinge() ? (rep % 4 < 2 ? 1.0 : -1.0) : oracle::gaussian(rng, 1)(0);
    AttackConfig c;
    c.eps = 0.05 + 0.01 * rep;
    const Vector adv = pgd(w, x, y, c, loss);
    CHECK((adv - x).lpNorm<Eigen::Infinity>() <= c.eps);
    AttackConfig one = c;
    one.gamma = c.eps;
    one.steps = 1;
    CHECK(pgd(w, x, y, one, loss) == fgsm(w, x, y, c, loss));
  }
}

TEST_CASE("PGD finds at least the FGSM loss for one-dimensional neurons") {
  Engine rng = StreamFactory(53).stream({0});
  for (int rep = 0; rep < 100; ++rep) {
    const NetworkWeights w = random_net(rng, 1, 1);
    const Vector x = oracle::gaussian(rng, 1);
    const double y = rep % 2 ? 1.0 : -1.0;
    AttackConfig c;
    c.eps = 0.2;
    for (auto loss : {LossKind::hinge(), LossKind::squared()}) {
      CHECK(loss_at(w, pgd(w, x, y, c, loss), y, loss) >= loss_at(w, fgsm(w, x, y, c, loss), y, loss) - 1e-12);
    }
  }
}

TEST_CASE("attack configuration checks") {
  AttackConfig c;
  c.eps = -1.0;
  CHECK_THROWS_AS(c.validate(2), InvalidArgument);
  c.eps = 0.3;
  CHECK(c.step() == doctest::Approx(0.01));
  c.steps = 0;
  CHECK_THROWS_AS(c.validate(2), InvalidArgument);
  c.steps = 40;
  c.perturbed = {true};
  CHECK_THROWS_AS(c.validate(2), DimensionError);
  const NetworkWeights w(Matrix::Ones(2, 1), Vector::Ones(1));
  AttackConfig ok;
  CHECK_THROWS_AS(fgsm(w, Vector::Ones(3), 1.0, ok, LossKind::hinge()), DimensionError);
}

TEST_CASE("frozen coordinates are never moved") {
  Engine rng = StreamFactory(54).stream({0});
  const NetworkWeights w = random_net(rng, 3, 4);
  AttackConfig c;
  c.eps = 0.5;
  c.perturbed = {true, true, false};
  const Vector x = oracle::gaussian(rng, 3);
  CHECK(pgd(w, x, 1.0, c, LossKind::hinge())(2) == x(2));
  CHECK(fgsm(w, x, 1.0, c, LossKind::squared())(2) == x(2));
}

TEST_CASE("closed-form hinge perturbation") {
  ConvexSolution s;
  s.patterns = {ActivationPattern({1})};
  s.v = {(Vector(2) << 1.0, -2.0).finished()};
  s.w = {Vector::Zero(2)};
  const Matrix delta = hinge_worstcase_delta(s, Vector::Ones(1), 0.1);
  CHECK(delta(0, 0) == doctest::Approx(-0.1));
  CHECK(delta(0, 1) == doctest::Approx(0.1));
  CHECK(hinge_worstcase_delta(s, Vector::Ones(1), 0.0).isZero(0.0));
  s.patterns = {ActivationPattern({0})};
  CHECK(hinge_worstcase_delta(s, Vector::Ones(1), 0.1).isZero(0.0));
}

TEST_CASE("closed-form perturbation attains the vertex maximum") {
  Engine rng = StreamFactory(55).stream({0});
  for (int rep = 0; rep < 100; ++rep) {
    const Index d = 1 + rep % 8, n = 6;
    const Dataset data = make_dataset(oracle::gaussian(rng, n, d), oracle::labels(rng, n), TaskKind::binary);
    const ConvexSolution s = random_solution(rng, data.X, 3);
    const double eps = 0.05 * (1 + rep % 10);
    const Matrix delta = hinge_worstcase_delta(s, data.y, eps);
    double vertex_sum = 0.0;
    for (Index k = 0; k < n; ++k) {
      double best = -INFINITY;
      oracle::for_each_vertex(d, eps, [&](const Vector& dv) { best = std::max(best, surrogate_sample_loss(s, data, k, dv)); });
      const double at = surrogate_sample_loss(s, data, k, delta.row(k).transpose());
      CHECK(std::abs(at - best) <= 1e-9);
      CHECK(std::abs(surrogate_vertex_max(s, data, k, eps) - best) <= 1e-12);
      vertex_sum += best;
    }
    CHECK(std::abs(surrogate_inner_max_value(s, data, eps) - vertex_sum) <= 1e-9);
  }
}

TEST_CASE("closed-form objective values") {
  Engine rng = StreamFactory(56).stream({0});
  const Dataset data = make_dataset(oracle::gaussian(rng, 8, 2), oracle::labels(rng, 8), TaskKind::binary);
  ConvexSolution zero = random_solution(rng, data.X, 2);
  for (auto& v : zero.v) v.setZero();
  for (auto& w : zero.w) w.setZero();
  CHECK(surrogate_inner_max_value(zero, data, 0.3, 0.5) == 1.0);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto patterns = sample_adversarial(data.X, SamplerConfig{6, 3, 4, seed, 0.1}).patterns;
    const ConicProgram p = build_hinge_robust(data, patterns, 0.01, RobustSpec{0.1});
    const SolveResult r = solve(p);
    REQUIRE(r.optimal());
    const ConvexSolution sol = decode_solution(p, r.primal);
    CHECK(std::abs(surrogate_inner_max_value(sol, data, 0.1, 0.01) - r.objective) <= 1e-7);
  }
}

TEST_CASE("vertex adversarial loss grows with eps") {
  Engine rng = StreamFactory(57).stream({0});
  const Dataset data = make_dataset(oracle::gaussian(rng, 8, 3), oracle::labels(rng, 8), TaskKind::binary);
  const ConvexSolution s = random_solution(rng, data.X, 3);
  for (Index k = 0; k < 8; ++k) {
    double last = -1.0;
    for (double eps : {0.0, 0.1, 0.2, 0.5, 1.0}) {
      const double value = surrogate_vertex_max(s, data, k, eps);
      CHECK(value >= last);
      last = value;
    }
  }
}

TEST_CASE("evaluation of trivial models") {
  Engine rng = StreamFactory(58).stream({0});
  const Dataset data = make_dataset(oracle::gaussian(rng, 20, 2), oracle::labels(rng, 20), TaskKind::binary);
  AttackConfig c;
  c.eps = 0.2;
  const Evaluation zero = evaluate(NetworkWeights(Matrix::Zero(2, 3), Vector::Zero(3)), data, c, LossKind::hinge());
  const double positives = (data.y.array() > 0.0).cast<double>().mean();
  CHECK(zero.clean == doctest::Approx(positives));
  CHECK(zero.fgsm == zero.clean);
  CHECK(zero.pgd == zero.clean);
  CHECK(zero.mean_loss == 1.0);

  const NetworkWeights net = random_net(rng, 2, 4);
  AttackConfig none;
  const Evaluation e = evaluate(net, data, none, LossKind::hinge());
  CHECK(e.fgsm == e.clean);
  CHECK(e.pgd == e.clean);
  CHECK(evaluate(net, data, c, LossKind::hinge()).pgd <= e.clean);
  const Dataset reg = make_dataset(data.X, oracle::gaussian(rng, 20), TaskKind::regression);
  const Evaluation r = evaluate(net, reg, none, LossKind::squared());
  CHECK(!r.classification);
  CHECK(r.clean == doctest::Approx((forward(net, reg.X) - reg.y).squaredNorm() / 20.0));
  CHECK(r.pgd == r.clean);
  CHECK(evaluate(net, reg, c, LossKind::squared()).pgd >= r.clean - 1e-12);
}

TEST_CASE("attacked rows export as CSV") {
  Matrix X(2, 2);
  X << 0.5, -1.0, 0.25, 2.0;
  std::ostringstream out;
  write_attacked_csv(out, X, (Vector(2) << 1.0, -1.0).finished());
  const std::string text = out.str();
  CHECK(text.rfind("x0,x1,y\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
}

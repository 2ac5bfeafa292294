#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cvxnn/datasets.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace cvxnn;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double worst = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return worst;
}

std::vector<double> column(const Matrix& X, Index j) { return {X.col(j).begin(), X.col(j).end()}; }

}  // namespace

TEST_CASE("toy dataset shapes and ranges") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DataSplit t1 = gen_toy("toy1d", seed);
    CHECK(t1.train.n() == 15);
    CHECK(t1.train.d() == 1);
    CHECK(t1.train.X.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(!t1.test);
    const DataSplit t2 = gen_toy("toy2d", seed);
    CHECK(t2.train.n() == 34);
    CHECK(t2.train.d() == 2);
    CHECK(t2.train.X.cwiseAbs().maxCoeff() <= 2.0);
    CHECK(t2.train.y.cwiseAbs().minCoeff() == 1.0);
    const DataSplit st = gen_toy("staircase", seed);
    CHECK(st.train.n() == 8);
    REQUIRE(st.test);
    CHECK(st.test->n() == 100);
    CHECK(st.train.task == TaskKind::regression);
    for (Index k = 0; k < st.test->n(); ++k) CHECK(st.test->y(k) == staircase_target(st.test->X(k, 0)));
  }
  CHECK(gen_toy("toy2d", 3).train.X == gen_toy("toy2d", 3).train.X);
  CHECK_THROWS_AS(gen_toy("toy3d", 0), InvalidArgument);
}

TEST_CASE("staircase target levels") {
  CHECK(staircase_target(-1.5) == -1.5);
  CHECK(staircase_target(-0.5) == -0.5);
  CHECK(staircase_target(0.5) == 0.5);
  CHECK(staircase_target(1.99) == 1.5);
}

TEST_CASE("staircase train and test come from one distribution") {
  // Under a shared distribution the statistic for sizes 8 and 100 exceeds 0.5 in a few
  // percent of draws (simulated below with the same sizes), so the mean is compared.
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DataSplit s = gen_toy("staircase", seed);
    mean += ks_statistic(column(s.train.X, 0), column(s.test->X, 0)) / 20.0;
  }
  Engine rng = StreamFactory(70).stream({0});
  double null_mean = 0.0;
  for (int rep = 0; rep < 2000; ++rep) {
    std::vector<double> a(8), b(100);
    for (auto& x : a) x = uniform(rng, -2.0, 2.0);
    for (auto& x : b) x = uniform(rng, -2.0, 2.0);
    null_mean += ks_statistic(a, b) / 2000.0;
  }
  CHECK(mean < 0.5);
  CHECK(std::abs(mean - null_mean) < 0.1);
}

TEST_CASE("masses stand-in ingests to 581 training rows of 5 features") {
  std::stringstream table;
  write_masses_standin(table, 1);
  CsvOptions opt;
  opt.label_col = "Severity";
  const DataSplit split = ingest_csv_stream(table, opt);
  CHECK(split.train.n() == 581);
  CHECK(split.train.d() == 5);
  REQUIRE(split.test);
  CHECK(split.test->n() == 830 - 581);
  for (Index j = 0; j < 5; ++j) {
    const Vector c = split.train.X.col(j);
    const double mu = c.mean();
    const double sd = std::sqrt((c.array() - mu).square().mean());
    CHECK(std::abs(mu) <= 1e-10);
    CHECK(std::abs(sd - 1.0) <= 1e-10);
  }
  CHECK(split.train.y.cwiseAbs().minCoeff() == 1.0);
}

TEST_CASE("rows with missing values are dropped") {
  std::stringstream in;
  in << "a,b,label\n";
  for (int k = 0; k < 10; ++k) {
    if (k == 4) in << "NaN,NaN,NaN\n";
    else in << k << ',' << 2 * k << ',' << (k % 2) << '\n';
  }
  const Dataset d = read_dataset_csv(in, "label", TaskKind::binary);
  CHECK(d.n() == 9);
  CHECK(d.y(0) == -1.0);
  CHECK(d.y(1) == 1.0);
  std::stringstream partial("a,b,label\n1,?,0\n2,3,1\n4,,0\n5,6,NA\n7,8,0\n");
  CHECK(read_dataset_csv(partial, "label", TaskKind::binary).n() == 2);
}

TEST_CASE("ingest errors") {
  std::stringstream three("a,label\n1,0\n2,1\n3,2\n");
  CHECK_THROWS(read_dataset_csv(three, "label", TaskKind::binary));
  std::stringstream text("a,label\n1,0\nfoo,1\n");
  CHECK_THROWS(read_dataset_csv(text, "label", TaskKind::binary));
  std::stringstream header("a,label\n1,0\n");
  CHECK_THROWS(read_dataset_csv(header, "missing", TaskKind::binary));
  CHECK_THROWS(ingest_csv("/nonexistent/file.csv", CsvOptions{"label"}));
}

TEST_CASE("split is reproducible and respects the fraction") {
  std::stringstream a, b;
  write_masses_standin(a, 2);
  write_masses_standin(b, 2);
  CsvOptions opt{"Severity", 0.5, false, 7, TaskKind::binary};
  const DataSplit x = ingest_csv_stream(a, opt), y = ingest_csv_stream(b, opt);
  CHECK(x.train.X == y.train.X);
  CHECK(x.train.n() + x.test->n() == 830);
  CHECK(x.train.n() == 415);
}

TEST_CASE("dataset CSV round-trips exactly") {
  Engine rng = StreamFactory(71).stream({0});
  for (auto task : {TaskKind::binary, TaskKind::regression}) {
    const Dataset d = make_dataset(oracle::gaussian(rng, 12, 3),
                                   task == TaskKind::binary ? oracle::labels(rng, 12) : oracle::gaussian(rng, 12), task);
    std::stringstream io;
    write_dataset_csv(io, d);
    const Dataset back = read_dataset_csv(io, "y", task);
    CHECK(back.X == d.X);
    CHECK(back.y == d.y);
  }
}

TEST_CASE("dataset invariants") {
  CHECK_THROWS_AS(make_dataset(Matrix::Ones(2, 2), Vector::Ones(3), TaskKind::regression), DimensionError);
  CHECK_THROWS_AS(make_dataset(Matrix::Ones(2, 2), Vector::Constant(2, 0.5), TaskKind::binary), InvalidArgument);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 0) = NAN;
  CHECK_THROWS_AS(make_dataset(bad, Vector::Ones(2), TaskKind::regression), InvalidArgument);
  const Dataset b = append_bias(make_dataset(Matrix::Zero(3, 2), Vector::Ones(3), TaskKind::binary));
  CHECK(b.d() == 3);
  CHECK(b.bias_appended);
  CHECK(b.X.col(2).isOnes(0.0));
}

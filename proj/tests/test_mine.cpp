#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ccafuse/errors.hpp"
#include "ccafuse/mine.hpp"
#include "ccafuse/random.hpp"

using namespace ccafuse;

namespace {

struct Pair {
  Matrix x;
  Matrix z;
};

// x ~ N(0, 1), z = rho x + sqrt(1 - rho^2) e, per column. True MI = -d/2 ln(1 - rho^2).
Pair correlated(Eigen::Index n, Eigen::Index d, double rho, std::uint64_t seed) {
  RandomStream rng(seed);
  Pair p;
  p.x = normal_matrix(rng, n, d);
  p.z = rho * p.x + std::sqrt(1.0 - rho * rho) * normal_matrix(rng, n, d);
  return p;
}

MineConfig fast_config() {
  MineConfig c;
  c.hidden = {32, 32};
  c.batch_size = 200;
  c.epochs = 60;
  c.optimizer.learning_rate = 3e-3;
  c.smoothing_window = 10;
  return c;
}

}  // namespace

TEST_CASE("moving average") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const std::vector<double> m = moving_average(v, 2);
  const std::vector<double> expected{1, 1.5, 2.5, 3.5, 4.5};
  REQUIRE(m.size() == expected.size());
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx(expected[i]));
  CHECK(moving_average(v, 1) == v);
  CHECK(moving_average(v, 10).back() == doctest::Approx(3.0));
  CHECK_THROWS_AS(moving_average(v, 0), ParameterError);
}

TEST_CASE("pair_rows concatenates the chosen rows") {
  Matrix x(3, 1);
  x << 1, 2, 3;
  Matrix z(3, 2);
  z << 10, 11, 20, 21, 30, 31;
  const std::vector<std::size_t> rows{0, 2};
  const std::vector<std::size_t> zr{1, 1};
  const Matrix p = pair_rows(x, z, rows, zr);
  Matrix expected(2, 3);
  expected << 1, 20, 21, 3, 20, 21;
  CHECK(p == expected);
  CHECK_THROWS_AS(pair_rows(x, z, rows, std::vector<std::size_t>{0}), DimensionError);
}

TEST_CASE("a constant statistic gives a zero bound") {
  RandomStream rng(1);
  std::vector<DenseLayer> layers(1);
  layers[0].weights = Matrix::Zero(3, 1);
  layers[0].bias = Vector::Constant(1, 2.5);
  const Network t(layers);
  const Matrix joint = normal_matrix(rng, 50, 3);
  const Matrix marginal = normal_matrix(rng, 50, 3);
  CHECK(std::abs(dv_bound(t, joint, marginal)) < 1e-12);
}

TEST_CASE("dv bound of a linear statistic matches the hand computation") {
  std::vector<DenseLayer> layers(1);
  layers[0].weights = Matrix::Ones(2, 1);
  layers[0].bias = Vector::Zero(1);
  const Network t(layers);
  Matrix joint(2, 2);
  joint << 1, 1, 0, 1;  // T = 2, 1
  Matrix marginal(2, 2);
  marginal << 0, 0, 1, 0;  // T = 0, 1
  const double expected = 1.5 - std::log((1.0 + std::exp(1.0)) / 2.0);
  CHECK(dv_bound(t, joint, marginal) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("estimator tracks the Gaussian closed form") {
  const MineConfig cfg = fast_config();
  const Pair dep = correlated(2000, 1, 0.8, 7);
  RandomStream rng(7);
  const MiCurve c = estimate_mi(dep.x, dep.z, cfg, rng);
  const double truth = -0.5 * std::log(1.0 - 0.64);
  REQUIRE(c.values.size() == 60);
  REQUIRE(c.smoothed.size() == 60);
  CHECK(c.estimate == doctest::Approx(std::accumulate(c.smoothed.end() - 6, c.smoothed.end(), 0.0) / 6.0));
  CHECK(c.estimate > 0.6 * truth);
  CHECK(c.estimate < truth + 0.1);

  const Pair indep = correlated(2000, 1, 0.0, 8);
  RandomStream rng2(8);
  const MiCurve ci = estimate_mi(indep.x, indep.z, cfg, rng2);
  CHECK(ci.estimate < 0.05);
  CHECK(ci.estimate < c.estimate);
}

TEST_CASE("estimator is deterministic per stream") {
  MineConfig cfg = fast_config();
  cfg.epochs = 5;
  const Pair p = correlated(600, 2, 0.5, 3);
  RandomStream a(11);
  RandomStream b(11);
  CHECK(estimate_mi(p.x, p.z, cfg, a).values == estimate_mi(p.x, p.z, cfg, b).values);
}

TEST_CASE("compare_mi reports transformed minus original") {
  MineConfig cfg = fast_config();
  cfg.epochs = 10;
  const Pair weak = correlated(800, 1, 0.2, 4);
  const Pair strong = correlated(800, 1, 0.9, 5);
  RandomStream rng(4);
  const MiComparison cmp = compare_mi(weak.x, weak.z, strong.x, strong.z, cfg, rng);
  CHECK(cmp.difference == doctest::Approx(cmp.transformed.estimate - cmp.original.estimate));
  CHECK(cmp.difference > 0.0);
}

TEST_CASE("mine argument checks") {
  MineConfig cfg = fast_config();
  const Pair p = correlated(100, 1, 0.5, 1);
  RandomStream rng(1);
  CHECK_THROWS_AS(estimate_mi(p.x, p.z, cfg, rng), DimensionError);  // fewer rows than one batch
  cfg.batch_size = 50;
  CHECK_THROWS_AS(estimate_mi(p.x, p.z.topRows(60), cfg, rng), DimensionError);
  cfg.ema_decay = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = fast_config();
  cfg.epochs = 0;
  CHECK_THROWS_AS(estimate_mi(p.x, p.z, cfg, rng), ParameterError);
}

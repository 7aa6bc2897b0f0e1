#include <doctest.h>

#include <cmath>

#include "ccafuse/classifier.hpp"
#include "ccafuse/errors.hpp"

using namespace ccafuse;

namespace {

struct Blobs {
  Matrix x;
  Labels y;
};

Blobs blobs(RandomStream& rng, int per_class, double sigma) {
  Blobs b;
  b.x.resize(3 * per_class, 2);
  const double centers[3][2] = {{0, 0}, {5, 0}, {0, 5}};
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < per_class; ++i) {
      const int r = c * per_class + i;
      b.x(r, 0) = centers[c][0] + sigma * rng.normal();
      b.x(r, 1) = centers[c][1] + sigma * rng.normal();
      b.y.push_back(c);
    }
  }
  return b;
}

}  // namespace

TEST_CASE("separable pair") {
  Matrix x(2, 1);
  x << -1, 1;
  const Labels y{0, 1};
  RandomStream rng(1);
  SvmConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 50;
  const SvmModel m = train_svm(x, y, cfg, rng);
  CHECK(predict(m, x) == y);
  CHECK(accuracy(y, predict(m, x)) == 1.0);
}

TEST_CASE("blobs") {
  RandomStream rng(2);
  const Blobs train = blobs(rng, 100, 0.1), test = blobs(rng, 100, 0.1);
  RandomStream r1(3), r2(4);
  const SvmModel a = train_svm(train.x, train.y, SvmConfig{}, r1);
  const SvmModel b = train_svm(train.x, train.y, SvmConfig{}, r2);
  const double acc_a = accuracy(test.y, predict(a, test.x));
  const double acc_b = accuracy(test.y, predict(b, test.x));
  CHECK(acc_a >= 0.98);
  CHECK(std::abs(acc_a - acc_b) < 0.02);
  CHECK(predict(a, test.x) == predict(a, test.x));

  int down = 0;
  for (std::size_t e = 1; e < a.objective_curve.size(); ++e) down += a.objective_curve[e] <= a.objective_curve[e - 1];
  CHECK(static_cast<double>(down) >= 0.9 * static_cast<double>(a.objective_curve.size() - 1));

  const Matrix p = predict_proba(a, test.x);
  CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  const Labels pred = predict(a, test.x);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best;
    p.row(i).maxCoeff(&best);
    CHECK(best == pred[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("heavy regularization collapses to the majority class") {
  RandomStream rng(5);
  Blobs b = blobs(rng, 50, 1.0);
  // Make class 2 the majority.
  for (int i = 0; i < 40; ++i) {
    b.y[static_cast<std::size_t>(i)] = 2;
  }
  SvmConfig cfg;
  cfg.c = 1e-9;
  const SvmModel m = train_svm(b.x, b.y, cfg, rng);
  CHECK(m.weights.cwiseAbs().maxCoeff() < 1e-6);
  int majority = 0;
  for (int y : b.y) majority += y == 2;
  CHECK(accuracy(b.y, predict(m, b.x)) == doctest::Approx(static_cast<double>(majority) / b.y.size()));
}

TEST_CASE("degenerate models and errors") {
  SvmModel zero;
  zero.weights = Matrix::Zero(2, 3);
  zero.bias = Vector::Zero(3);
  const Matrix x = Matrix::Ones(4, 2);
  CHECK(predict(zero, x) == Labels(4, 0));
  const Matrix p = predict_proba(zero, x);
  CHECK((p.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);

  SvmModel big = zero;
  big.bias(1) = 50.0;
  CHECK(predict_proba(big, x)(0, 1) > 0.99);

  CHECK_THROWS_AS(predict(zero, Matrix::Ones(4, 3)), DimensionError);
  RandomStream rng(6);
  CHECK_THROWS_AS(train_svm(x, Labels(4, 1), SvmConfig{}, rng), ParameterError);
  SvmConfig bad;
  bad.c = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

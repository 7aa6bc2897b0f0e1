#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "ccafuse/dataset.hpp"
#include "ccafuse/errors.hpp"
#include "ccafuse/numerics.hpp"
#include "ccafuse/random.hpp"

using namespace ccafuse;

TEST_CASE("random streams are reproducible and independent") {
  RandomStream a(42, 7), b(42, 7), c(42, 8);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs |= x != c.next_u64();
  }
  CHECK(differs);
  // Substreams depend only on (seed, stream, key), not on how far the parent advanced.
  RandomStream p(3), q(3);
  for (int i = 0; i < 5; ++i) p.next_u64();
  CHECK(p.substream("fold").next_u64() == q.substream("fold").next_u64());
  CHECK(p.substream(1).next_u64() != p.substream(2).next_u64());
}

TEST_CASE("random draws have the right moments") {
  RandomStream rng(9);
  const int n = 200000;
  double s = 0, ss = 0, g = 0, u = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    ss += x * x;
    g += rng.gamma(1.0);
    u += rng.uniform();
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.02);
  CHECK(std::abs(g / n - 1.0) < 0.02);
  CHECK(std::abs(u / n - 0.5) < 0.01);
  const auto perm = rng.permutation(50);
  CHECK(std::set<std::size_t>(perm.begin(), perm.end()).size() == 50);
}

TEST_CASE("center") {
  Matrix x(2, 2);
  x << 1, 3, 3, 5;
  const Centered c = center(x);
  Matrix expected(2, 2);
  expected << -1, -1, 1, 1;
  CHECK(c.matrix.isApprox(expected));
  CHECK(c.mean(0) == doctest::Approx(2));
  CHECK(c.mean(1) == doctest::Approx(4));

  const Centered again = center(c.matrix);
  CHECK((again.matrix - c.matrix).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(again.mean.cwiseAbs().maxCoeff() < 1e-12);

  RandomStream rng(1);
  const Matrix r = normal_matrix(rng, 50, 4).array() + 3.0;
  CHECK(center(r).matrix.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(center(Matrix(0, 3)), DimensionError);
}

TEST_CASE("covariance") {
  Matrix a(2, 1);
  a << -1, 1;
  CHECK(covariance(a, a, 0.0)(0, 0) == doctest::Approx(2.0));

  Matrix b(4, 2);
  b << 1, 0, -1, 0, 0, 1, 0, -1;
  const Matrix raw = covariance(b, b, 0.0);
  const Matrix ridge = covariance(b, b, 1e-8);
  CHECK(ridge(0, 0) - raw(0, 0) == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK(ridge(1, 1) - raw(1, 1) == doctest::Approx(1e-8).epsilon(1e-6));
  CHECK(ridge(0, 1) == raw(0, 1));

  RandomStream rng(2);
  const Matrix x = center(normal_matrix(rng, 30, 3)).matrix;
  const Matrix y = center(normal_matrix(rng, 30, 2)).matrix;
  Matrix brute = Matrix::Zero(3, 2);
  for (int n = 0; n < 30; ++n)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) brute(i, j) += x(n, i) * y(n, j);
  brute /= 29.0;
  CHECK((covariance(x, y, 0.5) - brute).norm() < 1e-10);  // ridge only for self-covariance

  const Matrix s = covariance(x, x, 0.0);
  CHECK((s - s.transpose()).norm() < 1e-14);
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().minCoeff() >= -1e-10);
  CHECK_THROWS_AS(covariance(x, Matrix(29, 2)), DimensionError);
}

TEST_CASE("inverse square root") {
  CHECK(inv_sqrt_sym(Matrix::Identity(3, 3)).isApprox(Matrix::Identity(3, 3)));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const Matrix r = inv_sqrt_sym(d);
  CHECK(r(0, 0) == doctest::Approx(0.5));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(std::abs(r(0, 1)) < 1e-15);

  RandomStream rng(3);
  const Matrix g = normal_matrix(rng, 5, 5);
  const Matrix spd = g * g.transpose() + Matrix::Identity(5, 5);
  const Matrix rs = inv_sqrt_sym(spd);
  CHECK((rs * spd * rs - Matrix::Identity(5, 5)).norm() < 1e-6);
  CHECK((rs - rs.transpose()).cwiseAbs().maxCoeff() < 1e-9);

  Matrix asym = spd;
  asym(0, 1) += 1e-3;
  CHECK_THROWS_AS(inv_sqrt_sym(asym), ContractError);

  // Singular input: eigenvalues are clamped to the floor, output stays finite.
  const Matrix singular = Matrix::Ones(3, 3);
  CHECK(all_finite(inv_sqrt_sym(singular)));
}

TEST_CASE("svd") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 3;
  d(1, 1) = 2;
  const Svd s = svd(d);
  CHECK(s.singular(0) == doctest::Approx(3));
  CHECK(s.singular(1) == doctest::Approx(2));

  RandomStream rng(4);
  const Vector u = normal_matrix(rng, 5, 1).col(0);
  const Vector v = normal_matrix(rng, 3, 1).col(0);
  const Svd r1 = svd(u * v.transpose());
  CHECK((r1.singular.array() > 1e-10).count() == 1);

  const Matrix m = normal_matrix(rng, 6, 4);
  const Svd full = svd(m);
  CHECK((full.u * full.singular.asDiagonal() * full.v.transpose() - m).norm() < 1e-8);
  for (Eigen::Index i = 1; i < full.singular.size(); ++i) CHECK(full.singular(i) <= full.singular(i - 1));
  CHECK(full.singular.minCoeff() >= 0.0);
  // Sign convention: the first non-negligible entry of each left vector is nonnegative.
  for (Eigen::Index j = 0; j < full.u.cols(); ++j) {
    for (Eigen::Index i = 0; i < full.u.rows(); ++i) {
      if (std::abs(full.u(i, j)) > 1e-12) {
        CHECK(full.u(i, j) > 0.0);
        break;
      }
    }
  }
}

TEST_CASE("finiteness and helpers") {
  Matrix m = Matrix::Zero(2, 2);
  CHECK_NOTHROW(require_finite(m, "m"));
  m(1, 1) = std::nan("");
  CHECK_THROWS(require_finite(m, "m"));

  RandomStream rng(5);
  const Matrix q = random_orthogonal(rng, 4);
  CHECK((q.transpose() * q - Matrix::Identity(4, 4)).norm() < 1e-10);

  Vector x(4), y(4);
  x << 1, 2, 3, 4;
  y << 2, 4, 6, 8;
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(pearson(x, -y) == doctest::Approx(-1.0));
}

TEST_CASE("feature CSV round trip") {
  FeatureMatrix fm;
  fm.values.resize(3, 2);
  fm.values << 0.1, -2.5e-17, 1.0 / 3.0, 12345.678, -0.0, 7;
  fm.columns = {"a", "b"};
  const Labels labels{0, 2, 1};
  const auto path = (std::filesystem::temp_directory_path() / "ccafuse_roundtrip.csv").string();
  write_feature_csv(path, fm, &labels);
  const CsvTable t = read_feature_csv(path);
  CHECK(t.features.values == fm.values);
  CHECK(t.features.columns == fm.columns);
  REQUIRE(t.labels.has_value());
  CHECK(*t.labels == labels);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_feature_csv("/nonexistent/file.csv"), IoError);
}

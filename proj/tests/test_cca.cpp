#include <doctest.h>

#include <cmath>
#include <vector>

#include "ccafuse/cca.hpp"
#include "ccafuse/errors.hpp"

using namespace ccafuse;

namespace {

double column_corr(const Matrix& a, const Matrix& b) { return pearson(a.col(0), b.col(0)); }

}  // namespace

TEST_CASE("identical views are perfectly correlated") {
  RandomStream rng(1);
  const Matrix x = normal_matrix(rng, 500, 3);
  const CcaModel m = fit_cca(x, x, 3, 1e-8);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(m.correlations(i) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("independent views are uncorrelated") {
  RandomStream rng(2);
  const Matrix x = normal_matrix(rng, 20000, 3);
  const Matrix y = normal_matrix(rng, 20000, 3);
  const CcaModel m = fit_cca(x, y, 3);
  CHECK(m.correlations.maxCoeff() < 0.05);
}

TEST_CASE("one-dimensional CCA is the absolute Pearson correlation") {
  RandomStream rng(3);
  Matrix x = normal_matrix(rng, 300, 1);
  Matrix y = -0.6 * x + 0.8 * normal_matrix(rng, 300, 1);
  const CcaModel m = fit_cca(x, y, 1, 0.0);
  CHECK(std::abs(m.correlations(0) - std::abs(pearson(x.col(0), y.col(0)))) < 1e-9);
}

TEST_CASE("transform") {
  RandomStream rng(4);
  const std::vector<double> corrs{0.8, 0.4};
  const auto [x1, x2] = planted_cca_data(rng, corrs, 4, 3, 2000);
  const CcaModel m1 = fit_cca(x1, x2, 1);
  const auto [o1, o2] = transform(m1, x1, x2);
  CHECK(o1.cols() == 1);
  CHECK(column_corr(o1, o2) == doctest::Approx(m1.correlations(0)).epsilon(1e-6));

  const CcaModel m0 = fit_cca(x1, x2, 3, 0.0);
  const auto [p1, p2] = transform(m0, x1, x2);
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double var1 = center(p1.col(j)).matrix.squaredNorm() / (p1.rows() - 1);
    const double var2 = center(p2.col(j)).matrix.squaredNorm() / (p2.rows() - 1);
    CHECK(var1 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(var2 == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(transform(m0, x1.leftCols(3), x2), DimensionError);

  Matrix z1 = x1;
  z1.col(2).setConstant(5.0);
  const CcaModel mz = fit_cca(z1, x2, 2, 1e-8);
  const auto [q1, q2] = transform(mz, z1, x2);
  CHECK(all_finite(q1));
  CHECK(all_finite(q2));
}

TEST_CASE("planted correlations are recovered") {
  RandomStream rng(5);
  const std::vector<double> corrs{0.9, 0.5, 0.1};
  const auto [x1, x2] = planted_cca_data(rng, corrs, 5, 4, 20000);
  const CcaModel m = fit_cca(x1, x2, 3);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(m.correlations(i) - corrs[static_cast<std::size_t>(i)]) < 0.03);

  const std::vector<double> none;
  const auto [y1, y2] = planted_cca_data(rng, none, 3, 3, 20000);
  CHECK(fit_cca(y1, y2, 3).correlations.maxCoeff() < 0.05);

  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(planted_cca_data(rng, bad, 2, 2, 100), ParameterError);
}

TEST_CASE("invariances and errors") {
  RandomStream rng(6);
  const std::vector<double> corrs{0.7, 0.3};
  const auto [x1, x2] = planted_cca_data(rng, corrs, 3, 3, 1000);
  const CcaModel base = fit_cca(x1, x2, 3, 0.0);
  const CcaModel scaled = fit_cca(x1 * 37.5, x2, 3, 0.0);
  CHECK((base.correlations - scaled.correlations).cwiseAbs().maxCoeff() < 1e-6);
  const CcaModel swapped = fit_cca(x2, x1, 3, 0.0);
  CHECK((base.correlations - swapped.correlations).cwiseAbs().maxCoeff() < 1e-9);
  const CcaModel ridged = fit_cca(x1, x2, 3, 0.5);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(ridged.correlations(i) <= base.correlations(i) + 1e-12);
  for (Eigen::Index i = 1; i < 3; ++i) CHECK(base.correlations(i) <= base.correlations(i - 1));

  CHECK_THROWS_AS(fit_cca(x1, x2, 4), ParameterError);
  CHECK_THROWS_AS(fit_cca(x1, x2, 0), ParameterError);
  CHECK_THROWS_AS(fit_cca(x1.topRows(1), x2.topRows(1), 1), DimensionError);
}

#include "ccafuse/cca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccafuse/errors.hpp"

namespace ccafuse {

CcaModel fit_cca(const Matrix& x1, const Matrix& x2, Eigen::Index k, double reg) {
  require_finite(x1, "cca fit (view 1)");
  require_finite(x2, "cca fit (view 2)");
  if (x1.rows() != x2.rows()) throw DimensionError("cca fit: views have different sample counts");
  if (x1.rows() < 2) throw DimensionError("cca fit: need at least 2 samples");
  if (k < 1 || k > std::min(x1.cols(), x2.cols())) {
    throw ParameterError("cca fit: k = " + std::to_string(k) + " outside [1, min(d1, d2)]");
  }
  if (reg < 0.0) throw ParameterError("cca fit: negative regularization");

  Centered c1 = center(x1);
  Centered c2 = center(x2);
  const Matrix s11 = covariance(c1.matrix, c1.matrix, reg);
  const Matrix s22 = covariance(c2.matrix, c2.matrix, reg);
  const Matrix s12 = covariance(c1.matrix, c2.matrix);
  const Matrix w1 = inv_sqrt_sym(s11);
  const Matrix w2 = inv_sqrt_sym(s22);
  const Svd t = svd(w1 * s12 * w2);

  CcaModel model;
  model.proj1 = w1 * t.u.leftCols(k);
  model.proj2 = w2 * t.v.leftCols(k);
  model.correlations = t.singular.head(k).cwiseMin(1.0).cwiseMax(0.0);
  model.mean1 = std::move(c1.mean);
  model.mean2 = std::move(c2.mean);
  model.reg = reg;
  return model;
}

std::pair<Matrix, Matrix> transform(const CcaModel& model, const Matrix& x1, const Matrix& x2) {
  if (x1.cols() != model.proj1.rows() || x2.cols() != model.proj2.rows()) {
    throw DimensionError("cca transform: column counts differ from fit time");
  }
  if (x1.rows() != x2.rows()) throw DimensionError("cca transform: views have different sample counts");
  Matrix o1 = (x1.rowwise() - model.mean1.transpose()) * model.proj1;
  Matrix o2 = (x2.rowwise() - model.mean2.transpose()) * model.proj2;
  return {std::move(o1), std::move(o2)};
}

std::pair<Matrix, Matrix> planted_cca_data(RandomStream& rng, std::span<const double> correlations,
                                           Eigen::Index d1, Eigen::Index d2, Eigen::Index n) {
  const auto k = static_cast<Eigen::Index>(correlations.size());
  if (d1 < 1 || d2 < 1 || n < 2) throw ParameterError("planted_cca_data: invalid shape");
  if (k > std::min(d1, d2)) throw ParameterError("planted_cca_data: more targets than dimensions");
  for (double r : correlations) {
    if (!(r >= 0.0 && r < 1.0)) {
      throw ParameterError("planted_cca_data: target correlation must lie in [0, 1)");
    }
  }

  Matrix x1 = normal_matrix(rng, n, d1);
  Matrix x2 = normal_matrix(rng, n, d2);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double r = correlations[static_cast<std::size_t>(j)];
    x2.col(j) = r * x1.col(j) + std::sqrt(1.0 - r * r) * x2.col(j);
  }

  // Well-conditioned invertible mixing: orthogonal times a positive diagonal.
  auto mixing = [&rng](Eigen::Index d) {
    Vector scale(d);
    for (Eigen::Index i = 0; i < d; ++i) scale(i) = rng.uniform(0.5, 2.0);
    return Matrix(random_orthogonal(rng, d) * scale.asDiagonal());
  };
  const Matrix m1 = mixing(d1);
  const Matrix m2 = mixing(d2);
  return {x1 * m1, x2 * m2};
}

}  // namespace ccafuse

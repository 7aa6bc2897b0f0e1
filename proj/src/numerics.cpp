#include "ccafuse/numerics.hpp"

#include <cmath>
#include <string>

#include "ccafuse/errors.hpp"

namespace ccafuse {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, std::string_view what) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw DimensionError(std::string(what) + ": empty matrix");
  }
  if (!m.allFinite()) {
    throw ContractError(std::string(what) + ": non-finite entries");
  }
}

Centered center(const Matrix& x) {
  if (x.rows() < 1 || x.cols() < 1) throw DimensionError("center: empty matrix");
  Centered out;
  out.mean = x.colwise().mean().transpose();
  out.matrix = x.rowwise() - out.mean.transpose();
  return out;
}

Matrix covariance(const Matrix& a, const Matrix& b, double reg) {
  if (a.rows() != b.rows()) {
    throw DimensionError("covariance: row counts differ (" + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()) + ")");
  }
  if (a.rows() < 2) throw DimensionError("covariance: need at least 2 rows");
  if (reg < 0.0) throw ParameterError("covariance: negative regularization");
  Matrix c = (a.transpose() * b) / static_cast<double>(a.rows() - 1);
  if (&a == &b) c.diagonal().array() += reg;
  return c;
}

Matrix inv_sqrt_sym(const Matrix& m, double floor) {
  if (m.rows() != m.cols()) throw DimensionError("inv_sqrt_sym: matrix not square");
  if (!(floor > 0.0)) throw ParameterError("inv_sqrt_sym: floor must be positive");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw ContractError("inv_sqrt_sym: input is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw ContractError("inv_sqrt_sym: eigensolver failed");
  Vector inv_root = eig.eigenvalues().unaryExpr(
      [floor](double lambda) { return 1.0 / std::sqrt(std::max(lambda, floor)); });
  const Matrix& q = eig.eigenvectors();
  Matrix r = q * inv_root.asDiagonal() * q.transpose();
  return 0.5 * (r + r.transpose());
}

Svd svd(const Matrix& m) {
  require_finite(m, "svd");
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  for (Eigen::Index j = 0; j < out.u.cols(); ++j) {
    for (Eigen::Index i = 0; i < out.u.rows(); ++i) {
      const double value = out.u(i, j);
      if (std::abs(value) > 1e-12) {
        if (value < 0.0) {
          out.u.col(j) *= -1.0;
          out.v.col(j) *= -1.0;
        }
        break;
      }
    }
  }
  return out;
}

double pearson(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("pearson: size mismatch");
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  return xc.dot(yc) / std::sqrt(xc.squaredNorm() * yc.squaredNorm());
}

Matrix normal_matrix(RandomStream& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

Matrix random_orthogonal(RandomStream& rng, Eigen::Index n) {
  Eigen::HouseholderQR<Matrix> qr(normal_matrix(rng, n, n));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

}  // namespace ccafuse

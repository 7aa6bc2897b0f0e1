#pragma once

#include <Eigen/Dense>

#include <string_view>

#include "ccafuse/random.hpp"

namespace ccafuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Default eigenvalue floor used when inverting covariance square roots.
inline constexpr double kEigenFloor = 1e-10;

/// Throws DimensionError for empty matrices and ContractError for NaN/Inf.
void require_finite(const Matrix& m, std::string_view what);
bool all_finite(const Matrix& m);

struct Centered {
  Matrix matrix;
  Vector mean;
};

/// Subtract column means. Rows are samples.
Centered center(const Matrix& x);

/// (1/(N-1)) a' b for centered a, b with N rows. `reg` is added to the
/// diagonal only when a and b are the same object (a self-covariance); a
/// cross-covariance between two equal-valued matrices stays unregularized.
Matrix covariance(const Matrix& a, const Matrix& b, double reg = 0.0);

inline Matrix self_covariance(const Matrix& a, double reg = 0.0) { return covariance(a, a, reg); }

/// R = M^{-1/2} for symmetric M, eigenvalues clamped below at `floor`.
Matrix inv_sqrt_sym(const Matrix& m, double floor = kEigenFloor);

struct Svd {
  Matrix u;          // m x r
  Vector singular;   // r, descending, nonnegative
  Matrix v;          // n x r
};

/// Thin SVD, r = min(m, n). Sign convention: the first entry of each left
/// singular vector with magnitude above 1e-12 is nonnegative.
Svd svd(const Matrix& m);

double pearson(const Vector& x, const Vector& y);

/// rows x cols of independent N(0, 1) draws, filled row by row.
Matrix normal_matrix(RandomStream& rng, Eigen::Index rows, Eigen::Index cols);

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
Matrix random_orthogonal(RandomStream& rng, Eigen::Index n);

/// Gather the given rows of m.
template <class Indices>
Matrix select_rows(const Matrix& m, const Indices& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  Eigen::Index r = 0;
  for (auto i : rows) out.row(r++) = m.row(static_cast<Eigen::Index>(i));
  return out;
}

}  // namespace ccafuse

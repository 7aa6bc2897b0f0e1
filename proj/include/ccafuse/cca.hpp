#pragma once

#include <span>
#include <utility>

#include "ccafuse/numerics.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

/// Linear CCA projections. Columns of proj1/proj2 are the paired canonical
/// directions; correlations are the matching canonical correlations.
struct CcaModel {
  Matrix proj1;          // d1 x k
  Matrix proj2;          // d2 x k
  Vector correlations;   // k, descending, clamped to [0, 1]
  Vector mean1;
  Vector mean2;
  double reg = 1e-8;

  Eigen::Index dims() const { return correlations.size(); }
  double total_correlation() const { return correlations.sum(); }
};

/// Fit via the SVD of T = S11^{-1/2} S12 S22^{-1/2} on ridge-regularized
/// covariances. Successive directions come out mutually uncorrelated from
/// the SVD itself; no deflation is performed.
CcaModel fit_cca(const Matrix& x1, const Matrix& x2, Eigen::Index k, double reg = 1e-8);

/// ((x1 - mean1) proj1, (x2 - mean2) proj2).
std::pair<Matrix, Matrix> transform(const CcaModel& model, const Matrix& x1, const Matrix& x2);

/// Two views with prescribed population canonical correlations.
///
/// Each target r_i gets a latent pair (a, r_i a + sqrt(1 - r_i^2) e) with a, e
/// independent standard normals; the remaining dimensions are independent
/// noise. Each view is then mixed by a random invertible matrix, which leaves
/// the canonical correlations unchanged.
std::pair<Matrix, Matrix> planted_cca_data(RandomStream& rng, std::span<const double> correlations,
                                           Eigen::Index d1, Eigen::Index d2, Eigen::Index n);

}  // namespace ccafuse

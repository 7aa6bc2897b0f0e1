#pragma once

#include <utility>
#include <vector>

#include "ccafuse/cca.hpp"
#include "ccafuse/errors.hpp"
#include "ccafuse/neuralnet.hpp"

namespace ccafuse {

/// Total canonical correlation of two tower outputs and its gradients.
struct CcaLoss {
  double corr = 0.0;       // nuclear norm of T (sum of its singular values)
  double frobenius = 0.0;  // ||T||_F, reported alongside
  Vector singular;         // singular values of T, descending
  Matrix grad1;            // d corr / d O1, N x d1
  Matrix grad2;            // d corr / d O2, N x d2
};

/// T = S11^{-1/2} S12 S22^{-1/2} with S11 = O1c'O1c/(N-1) + r1 I (likewise
/// S22) and S12 = O1c'O2c/(N-1). The objective is the sum of all singular
/// values of T. With T = U D V':
///
///   grad11 = -1/2 S11^{-1/2} U D U' S11^{-1/2}
///   grad12 = S11^{-1/2} U V' S22^{-1/2}
///   d corr / d O1 = (2 O1c grad11 + O2c grad12') / (N - 1)
///
/// and symmetrically for O2. Requires N >= max(d1, d2) + 2.
CcaLoss cca_loss(const Matrix& o1, const Matrix& o2, double reg1, double reg2,
                 Warnings* warnings = nullptr);
inline CcaLoss cca_loss(const Matrix& o1, const Matrix& o2, double reg, Warnings* warnings = nullptr) {
  return cca_loss(o1, o2, reg, reg, warnings);
}

struct DccaConfig {
  std::vector<int> hidden1{120, 120};
  std::vector<int> hidden2{120, 120};
  Eigen::Index out_dim = 12;
  Activation hidden_activation = Activation::sigmoid;
  Activation output_activation = Activation::identity;
  OptimizerConfig optimizer{};  // rmsprop, lr 1e-3, batch 100
  double reg1 = 1e-8;
  double reg2 = 1e-8;
  int epochs = 40;
  double alpha1 = 0.7;

  void validate() const;
};

struct DccaModel {
  Network tower1;
  Network tower2;
  Eigen::Index out_dim = 0;
  double alpha1 = 0.7;
  double reg1 = 1e-8;
  double reg2 = 1e-8;
  /// Total correlation on the full training set: entry 0 before any update,
  /// entry e after epoch e.
  std::vector<double> training_curve;
  /// Linear CCA fitted on the trained towers' training outputs. It rotates
  /// and whitens O1, O2 so that coordinate i of both views is the i-th
  /// canonical pair, which is what makes a coordinate-wise weighted sum
  /// meaningful. It leaves the total correlation unchanged.
  CcaModel alignment;
};

DccaModel train_dcca(const Matrix& x1, const Matrix& x2, const DccaConfig& config, RandomStream& rng,
                     Warnings* warnings = nullptr);

/// Raw tower outputs (O1, O2).
std::pair<Matrix, Matrix> transform(const DccaModel& model, const Matrix& x1, const Matrix& x2);

/// Tower outputs mapped through the alignment CCA; these are the features fused
/// and classified downstream.
std::pair<Matrix, Matrix> embed(const DccaModel& model, const Matrix& x1, const Matrix& x2);

/// alpha1 * o1 + (1 - alpha1) * o2.
Matrix fuse(const Matrix& o1, const Matrix& o2, double alpha1);

}  // namespace ccafuse

#pragma once

#include <vector>

#include "ccafuse/dataset.hpp"
#include "ccafuse/numerics.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

struct SvmConfig {
  double c = 1.0;
  int epochs = 30;
  int batch_size = 32;
  double initial_step = 0.5;  // step at update t is initial_step / sqrt(t)

  void validate() const;
};

/// One-vs-rest linear SVM. Column k of `weights` scores class k.
struct SvmModel {
  Matrix weights;  // d x K
  Vector bias;     // K
  double c = 1.0;
  /// Primal objective after each epoch, summed over the K binary problems.
  std::vector<double> objective_curve;

  Eigen::Index num_classes() const { return bias.size(); }
  Eigen::Index input_dim() const { return weights.rows(); }
};

/// Minibatch subgradient descent on, per class k,
///   lambda/2 |w_k|^2 + mean_i max(0, 1 - y_ik (x_i w_k + b_k)),
/// with lambda = 1 / (C N) (the C-SVM primal divided by C N) and y_ik = +1
/// for class k, -1 otherwise. The returned weights are the running average
/// of the iterates. Labels must be in 0..K-1 with at least two classes present.
SvmModel train_svm(const Matrix& x, const Labels& y, const SvmConfig& config, RandomStream& rng);

/// N x K margin scores x w + b.
Matrix decision_function(const SvmModel& model, const Matrix& x);
/// argmax of the scores; ties go to the lowest class index.
Labels predict(const SvmModel& model, const Matrix& x);
/// Row-wise softmax of the scores.
Matrix predict_proba(const SvmModel& model, const Matrix& x);

double accuracy(const Labels& truth, const Labels& predicted);

}  // namespace ccafuse

#pragma once

#include <utility>
#include <vector>

#include "ccafuse/errors.hpp"
#include "ccafuse/neuralnet.hpp"

namespace ccafuse {

/// Bernoulli-Bernoulli restricted Boltzmann machine with M visible and N
/// hidden units. E(v, h) = -v'Wh - b'v - a'h.
struct Rbm {
  Matrix weights;        // M x N
  Vector visible_bias;   // b, length M
  Vector hidden_bias;    // a, length N

  Eigen::Index visible() const { return weights.rows(); }
  Eigen::Index hidden() const { return weights.cols(); }
};

/// Small random weights (N(0, 0.01^2)), zero biases.
Rbm make_rbm(Eigen::Index visible, Eigen::Index hidden, RandomStream& rng);

double energy(const Rbm& rbm, const Vector& v, const Vector& h);

/// p(h_j = 1 | v) = sigmoid(v'W + a), row-wise.
Matrix hidden_probabilities(const Rbm& rbm, const Matrix& v);
/// p(v_i = 1 | h) = sigmoid(h W' + b), row-wise.
Matrix visible_probabilities(const Rbm& rbm, const Matrix& h);

/// Brute-force Z = sum_{v, h} exp(-E(v, h)) over binary states. Only for tiny
/// machines (M + N <= 20).
double partition_function(const Rbm& rbm);
double joint_probability(const Rbm& rbm, const Vector& v, const Vector& h, double partition);

/// Throws ContractError naming the first column with a value outside [0, 1].
void require_unit_interval(const Matrix& x, std::string_view what);

/// Positive-minus-negative phase statistics of one CD-1 step.
struct Cd1Statistics {
  Matrix grad_weights;      // (v'p(h|v) - v_neg'p(h|v_neg)) / B
  Vector grad_visible;      // mean(v - v_neg)
  Vector grad_hidden;       // mean(p(h|v) - p(h|v_neg))
  Matrix reconstruction;    // v_neg: mean-field visible given sampled hidden states
  double reconstruction_error = 0.0;  // mean squared (v - v_neg)
};

/// One Gibbs step: sample h ~ p(h|v), reconstruct v_neg = p(v|h) (mean field),
/// then h_neg = p(h|v_neg). The model expectation in the log-likelihood
/// gradient E_data[v h'] - E_model[v h'] is approximated by v_neg h_neg'.
Cd1Statistics cd1_statistics(const Rbm& rbm, const Matrix& batch, RandomStream& rng);

/// rbm += lr * statistics. Returns the statistics that were applied.
Cd1Statistics cd1_update(Rbm& rbm, const Matrix& batch, double lr, RandomStream& rng);

/// Deterministic mean-field reconstruction error: v -> p(h|v) -> p(v|h).
double reconstruction_error(const Rbm& rbm, const Matrix& x);

struct RbmTrainConfig {
  Eigen::Index hidden = 64;
  int epochs = 30;
  double learning_rate = 0.05;
  int batch_size = 32;
};

/// Returns the trained machine; `curve` (if non-null) receives the
/// reconstruction error after each epoch.
Rbm train_rbm(const Matrix& x, const RbmTrainConfig& config, RandomStream& rng,
              std::vector<double>* curve = nullptr);

struct BdaeConfig {
  Eigen::Index hidden1 = 64;
  Eigen::Index hidden2 = 64;
  Eigen::Index shared = 12;
  int pretrain_epochs = 30;
  double pretrain_learning_rate = 0.05;
  int pretrain_batch_size = 32;
  int finetune_epochs = 30;
  // RMSprop at 1e-3 sits on the mean-reconstruction plateau for the whole run; 1e-2 escapes it.
  OptimizerConfig finetune{OptimizerMethod::rmsprop, 1e-2, 32, 0.0, 0.9, 1e-8};

  void validate() const;
};

/// Bimodal deep autoencoder. Encoder: each modality through its RBM's hidden
/// layer, the two codes concatenated and passed through the joint RBM to the
/// shared layer. The decoder mirrors it with transposed weights (unfolded
/// stack), and the whole thing is fine-tuned on reconstruction error.
struct BdaeModel {
  Rbm rbm1;
  Rbm rbm2;
  Rbm joint;
  Network encoder1;
  Network encoder2;
  Network shared_encoder;
  Network shared_decoder;
  Network decoder1;
  Network decoder2;
  double pretrain_error = 0.0;           // reconstruction error before fine-tuning
  std::vector<double> finetune_curve;    // after each fine-tuning epoch

  Eigen::Index shared_dim() const { return shared_encoder.output_dim(); }
};

BdaeModel train_bdae(const Matrix& x1, const Matrix& x2, const BdaeConfig& config, RandomStream& rng,
                     Warnings* warnings = nullptr);

/// Shared-layer code, mean-field (no sampling).
Matrix encode(const BdaeModel& model, const Matrix& x1, const Matrix& x2);

/// Mean squared reconstruction error of view 1 plus that of view 2.
double reconstruction_error(const BdaeModel& model, const Matrix& x1, const Matrix& x2);

std::pair<Matrix, Matrix> reconstruct(const BdaeModel& model, const Matrix& x1, const Matrix& x2);

}  // namespace ccafuse

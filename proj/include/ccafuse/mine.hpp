#pragma once

#include <vector>

#include "ccafuse/neuralnet.hpp"

namespace ccafuse {

struct MineConfig {
  std::vector<int> hidden{100, 100};
  Activation activation = Activation::relu;
  int batch_size = 500;
  int epochs = 60;
  OptimizerConfig optimizer{OptimizerMethod::rmsprop, 1e-3, 500, 0.0, 0.9, 1e-8};
  int smoothing_window = 20;
  double ema_decay = 0.99;

  void validate() const;
};

struct MiCurve {
  std::vector<double> values;    // lower bound after each epoch, nats
  std::vector<double> smoothed;  // trailing moving average of `values`
  double estimate = 0.0;         // mean of the last 10% of `smoothed`
};

/// Donsker-Varadhan bound mean(T(joint)) - log(mean(exp(T(marginal)))).
/// Rows of `joint` and `marginal` are concatenated (x, z) pairs; the network
/// must have a scalar output. The log-mean-exp is evaluated with the maximum
/// subtracted.
double dv_bound(const Network& statistic, const Matrix& joint, const Matrix& marginal);

/// Pair rows of x with rows of z: [x_i | z_perm(i)].
Matrix pair_rows(const Matrix& x, const Matrix& z, std::span<const std::size_t> rows,
                 std::span<const std::size_t> z_rows);

/// MINE with a bias-corrected gradient for the log-partition term: its
/// gradient is scaled by mean(exp T) / EMA(mean(exp T)) so the minibatch
/// estimate of the denominator is replaced by a moving average.
///
/// x and z are standardized per column first (an invertible map, so the
/// mutual information is unchanged). Marginal samples are obtained by
/// permuting the z rows inside each minibatch. After every epoch the bound is
/// evaluated on the full sample against a fresh permutation of z.
MiCurve estimate_mi(const Matrix& x, const Matrix& z, const MineConfig& config, RandomStream& rng);

struct MiComparison {
  MiCurve original;
  MiCurve transformed;
  double difference = 0.0;  // transformed.estimate - original.estimate
};

MiComparison compare_mi(const Matrix& original_x, const Matrix& original_z, const Matrix& transformed_x,
                        const Matrix& transformed_z, const MineConfig& config, RandomStream& rng);

/// Trailing moving average with the given window.
std::vector<double> moving_average(const std::vector<double>& values, int window);

}  // namespace ccafuse

#include "ccafuse/mine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ccafuse/errors.hpp"

namespace ccafuse {

void MineConfig::validate() const {
  if (batch_size < 8) throw ParameterError("mine: batch size must be at least 8");
  if (epochs < 1) throw ParameterError("mine: epochs must be >= 1");
  if (smoothing_window < 1) throw ParameterError("mine: smoothing window must be >= 1");
  if (ema_decay <= 0.0 || ema_decay >= 1.0) throw ParameterError("mine: ema decay must lie in (0, 1)");
  for (int h : hidden)
    if (h < 1) throw ParameterError("mine: hidden layer sizes must be >= 1");
  optimizer.validate();
}

namespace {

double log_mean_exp(const Vector& t) {
  const double top = t.maxCoeff();
  return top + std::log((t.array() - top).exp().mean());
}

Matrix standardize(const Matrix& m) {
  Centered c = center(m);
  for (Eigen::Index j = 0; j < c.matrix.cols(); ++j) {
    const double sd = std::sqrt(c.matrix.col(j).squaredNorm() / static_cast<double>(std::max<Eigen::Index>(1, m.rows() - 1)));
    if (sd > 0.0) c.matrix.col(j) /= sd;
  }
  return c.matrix;
}

}  // namespace

double dv_bound(const Network& statistic, const Matrix& joint, const Matrix& marginal) {
  if (joint.rows() != marginal.rows() || joint.rows() < 1) {
    throw DimensionError("dv_bound: joint and marginal batches must have the same nonzero size");
  }
  if (statistic.output_dim() != 1) throw DimensionError("dv_bound: statistic network must output a scalar");
  const Vector tj = statistic.forward(joint).col(0);
  const Vector tm = statistic.forward(marginal).col(0);
  const double value = tj.mean() - log_mean_exp(tm);
  if (!std::isfinite(value)) throw TrainingError("dv_bound: non-finite value");
  return value;
}

Matrix pair_rows(const Matrix& x, const Matrix& z, std::span<const std::size_t> rows,
                 std::span<const std::size_t> z_rows) {
  if (rows.size() != z_rows.size()) throw DimensionError("pair_rows: index lists differ in length");
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols() + z.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out.row(r).head(x.cols()) = x.row(static_cast<Eigen::Index>(rows[i]));
    out.row(r).tail(z.cols()) = z.row(static_cast<Eigen::Index>(z_rows[i]));
  }
  return out;
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) throw ParameterError("moving_average: window must be >= 1");
  std::vector<double> out(values.size());
  double running = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    running += values[i];
    if (i >= static_cast<std::size_t>(window)) running -= values[i - static_cast<std::size_t>(window)];
    out[i] = running / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

MiCurve estimate_mi(const Matrix& x_raw, const Matrix& z_raw, const MineConfig& config, RandomStream& rng) {
  config.validate();
  require_finite(x_raw, "mine (x)");
  require_finite(z_raw, "mine (z)");
  if (x_raw.rows() != z_raw.rows()) throw DimensionError("mine: x and z have different sample counts");
  const auto n = static_cast<std::size_t>(x_raw.rows());
  const auto b = static_cast<std::size_t>(config.batch_size);
  if (n < b) throw DimensionError("mine: fewer samples than the batch size");

  const Matrix x = standardize(x_raw);
  const Matrix z = standardize(z_raw);
  RandomStream init_rng = rng.substream("init");
  RandomStream order_rng = rng.substream("order");
  RandomStream eval_rng = rng.substream("eval");

  const auto specs = make_layer_specs(x.cols() + z.cols(), config.hidden, 1, config.activation,
                                      Activation::identity);
  Network net(specs, init_rng);
  Optimizer opt(config.optimizer);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<std::size_t> all_rows = order;
  bool ema_ready = false;
  double log_ema = 0.0;
  const double decay = config.ema_decay;

  MiCurve curve;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start + b <= n; start += b) {
      std::span<const std::size_t> rows(order.data() + start, b);
      std::vector<std::size_t> shuffled(rows.begin(), rows.end());
      order_rng.shuffle(shuffled);

      Matrix input(static_cast<Eigen::Index>(2 * b), x.cols() + z.cols());
      input.topRows(static_cast<Eigen::Index>(b)) = pair_rows(x, z, rows, rows);
      input.bottomRows(static_cast<Eigen::Index>(b)) = pair_rows(x, z, rows, shuffled);
      Tape tape;
      const Vector t = net.forward(input, tape).col(0);
      const Vector tm = t.tail(static_cast<Eigen::Index>(b));
      const double batch_lme = log_mean_exp(tm);
      if (!std::isfinite(batch_lme)) {
        throw TrainingError("mine: non-finite statistic at epoch " + std::to_string(epoch));
      }
      if (!ema_ready) {
        log_ema = batch_lme;
        ema_ready = true;
      } else {
        // log(decay * exp(log_ema) + (1 - decay) * exp(batch_lme))
        const double a = std::log(decay) + log_ema;
        const double c = std::log1p(-decay) + batch_lme;
        const double top = std::max(a, c);
        log_ema = top + std::log(std::exp(a - top) + std::exp(c - top));
      }

      // Gradient of the loss -(mean T_joint - log mean exp T_marginal).
      Matrix upstream(static_cast<Eigen::Index>(2 * b), 1);
      const double inv_b = 1.0 / static_cast<double>(b);
      upstream.topRows(static_cast<Eigen::Index>(b)).setConstant(-inv_b);
      upstream.bottomRows(static_cast<Eigen::Index>(b)) = ((tm.array() - log_ema).exp() * inv_b).matrix();
      const Gradients g = net.backward(tape, upstream);
      try {
        opt.step(net, g);
      } catch (const TrainingError& e) {
        throw TrainingError("mine: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    std::vector<std::size_t> perm = eval_rng.permutation(n);
    const double value = dv_bound(net, pair_rows(x, z, all_rows, all_rows), pair_rows(x, z, all_rows, perm));
    if (!std::isfinite(value)) throw TrainingError("mine: non-finite bound at epoch " + std::to_string(epoch));
    curve.values.push_back(value);
  }
  curve.smoothed = moving_average(curve.values, config.smoothing_window);
  const std::size_t tail = std::max<std::size_t>(1, (curve.smoothed.size() + 9) / 10);
  double sum = 0.0;
  for (std::size_t i = curve.smoothed.size() - tail; i < curve.smoothed.size(); ++i) sum += curve.smoothed[i];
  curve.estimate = sum / static_cast<double>(tail);
  return curve;
}

MiComparison compare_mi(const Matrix& original_x, const Matrix& original_z, const Matrix& transformed_x,
                        const Matrix& transformed_z, const MineConfig& config, RandomStream& rng) {
  if (original_x.rows() != transformed_x.rows()) {
    throw DimensionError("compare_mi: original and transformed pairs differ in sample count");
  }
  MiComparison out;
  RandomStream r1 = rng.substream("original");
  RandomStream r2 = rng.substream("transformed");
  out.original = estimate_mi(original_x, original_z, config, r1);
  out.transformed = estimate_mi(transformed_x, transformed_z, config, r2);
  out.difference = out.transformed.estimate - out.original.estimate;
  return out;
}

}  // namespace ccafuse

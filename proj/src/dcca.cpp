#include "ccafuse/dcca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ccafuse {

CcaLoss cca_loss(const Matrix& o1, const Matrix& o2, double reg1, double reg2, Warnings* warnings) {
  if (o1.rows() != o2.rows()) throw DimensionError("cca_loss: outputs have different sample counts");
  const Eigen::Index n = o1.rows();
  if (n < std::max(o1.cols(), o2.cols()) + 2) {
    throw TrainingError("cca_loss: " + std::to_string(n) + " samples is too few for output dimension " +
                        std::to_string(std::max(o1.cols(), o2.cols())));
  }
  if (!o1.allFinite() || !o2.allFinite()) throw TrainingError("cca_loss: non-finite network outputs");

  const Matrix c1 = center(o1).matrix;
  const Matrix c2 = center(o2).matrix;
  const Matrix s11 = covariance(c1, c1, reg1);
  const Matrix s22 = covariance(c2, c2, reg2);
  const Matrix s12 = covariance(c1, c2);
  const Matrix w1 = inv_sqrt_sym(s11);
  const Matrix w2 = inv_sqrt_sym(s22);
  const Svd t = svd(w1 * s12 * w2);

  CcaLoss out;
  out.singular = t.singular;
  out.corr = t.singular.sum();
  out.frobenius = t.singular.norm();
  if (t.singular.size() > 0 && t.singular.minCoeff() < 1e-12) {
    warn(warnings, "cca_loss: singular value collapse (min " + std::to_string(t.singular.minCoeff()) + ")");
  }

  const Matrix grad12 = w1 * t.u * t.v.transpose() * w2;
  const Matrix grad11 = -0.5 * w1 * t.u * t.singular.asDiagonal() * t.u.transpose() * w1;
  const Matrix grad22 = -0.5 * w2 * t.v * t.singular.asDiagonal() * t.v.transpose() * w2;
  const double scale = 1.0 / static_cast<double>(n - 1);
  out.grad1 = scale * (2.0 * c1 * grad11 + c2 * grad12.transpose());
  out.grad2 = scale * (2.0 * c2 * grad22 + c1 * grad12);
  return out;
}

void DccaConfig::validate() const {
  optimizer.validate();
  if (out_dim < 1) throw ParameterError("dcca: output dimension must be >= 1");
  if (optimizer.batch_size < out_dim + 2) {
    throw ParameterError("dcca: batch size must be at least output dimension + 2");
  }
  if (reg1 < 0.0 || reg2 < 0.0) throw ParameterError("dcca: negative regularization");
  if (epochs < 0) throw ParameterError("dcca: negative epoch count");
  if (alpha1 < 0.0 || alpha1 > 1.0) throw ParameterError("dcca: alpha1 must lie in [0, 1]");
  for (int h : hidden1)
    if (h < 1) throw ParameterError("dcca: hidden layer sizes must be >= 1");
  for (int h : hidden2)
    if (h < 1) throw ParameterError("dcca: hidden layer sizes must be >= 1");
}

namespace {

// floor(n / batch) near-equal chunks; a short tail is spread over the others
// so no minibatch is smaller than `batch` (unless n itself is).
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
  const std::size_t count = std::max<std::size_t>(1, n / batch);
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t start = 0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t size = n / count + (b < n % count ? 1 : 0);
    ranges.emplace_back(start, start + size);
    start += size;
  }
  return ranges;
}

}  // namespace

DccaModel train_dcca(const Matrix& x1, const Matrix& x2, const DccaConfig& config, RandomStream& rng,
                     Warnings* warnings) {
  config.validate();
  require_finite(x1, "dcca train (view 1)");
  require_finite(x2, "dcca train (view 2)");
  if (x1.rows() != x2.rows()) throw DimensionError("dcca train: views have different sample counts");
  const auto n = static_cast<std::size_t>(x1.rows());
  if (n < static_cast<std::size_t>(config.out_dim + 2)) {
    throw DimensionError("dcca train: fewer samples than output dimension + 2");
  }

  RandomStream init_rng = rng.substream("init");
  RandomStream order_rng = rng.substream("order");

  DccaModel model;
  model.out_dim = config.out_dim;
  model.alpha1 = config.alpha1;
  model.reg1 = config.reg1;
  model.reg2 = config.reg2;
  const auto specs1 = make_layer_specs(x1.cols(), config.hidden1, config.out_dim, config.hidden_activation,
                                       config.output_activation);
  const auto specs2 = make_layer_specs(x2.cols(), config.hidden2, config.out_dim, config.hidden_activation,
                                       config.output_activation);
  model.tower1 = Network(specs1, init_rng);
  model.tower2 = Network(specs2, init_rng);

  auto full_correlation = [&](int epoch) {
    const double corr =
        cca_loss(model.tower1.forward(x1), model.tower2.forward(x2), config.reg1, config.reg2).corr;
    if (!std::isfinite(corr)) {
      throw TrainingError("dcca train: non-finite total correlation at epoch " + std::to_string(epoch));
    }
    return corr;
  };
  model.training_curve.push_back(full_correlation(0));

  Optimizer opt1(config.optimizer);
  Optimizer opt2(config.optimizer);
  const auto ranges = batch_ranges(n, static_cast<std::size_t>(config.optimizer.batch_size));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (const auto& [begin, end] : ranges) {
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix b1 = select_rows(x1, rows);
      const Matrix b2 = select_rows(x2, rows);
      Tape t1;
      Tape t2;
      const Matrix o1 = model.tower1.forward(b1, t1);
      const Matrix o2 = model.tower2.forward(b2, t2);
      try {
        const CcaLoss loss = cca_loss(o1, o2, config.reg1, config.reg2, warnings);
        // Minimize -corr.
        const Gradients g1 = model.tower1.backward(t1, -loss.grad1);
        const Gradients g2 = model.tower2.backward(t2, -loss.grad2);
        opt1.step(model.tower1, g1);
        opt2.step(model.tower2, g2);
      } catch (const TrainingError& e) {
        throw TrainingError("dcca train: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    model.training_curve.push_back(full_correlation(epoch));
  }

  const Matrix o1 = model.tower1.forward(x1);
  const Matrix o2 = model.tower2.forward(x2);
  model.alignment = fit_cca(o1, o2, config.out_dim, std::max(config.reg1, config.reg2));
  return model;
}

std::pair<Matrix, Matrix> transform(const DccaModel& model, const Matrix& x1, const Matrix& x2) {
  if (x1.cols() != model.tower1.input_dim() || x2.cols() != model.tower2.input_dim()) {
    throw DimensionError("dcca transform: input dimensions do not match the towers");
  }
  return {model.tower1.forward(x1), model.tower2.forward(x2)};
}

std::pair<Matrix, Matrix> embed(const DccaModel& model, const Matrix& x1, const Matrix& x2) {
  auto [o1, o2] = transform(model, x1, x2);
  return transform(model.alignment, o1, o2);
}

Matrix fuse(const Matrix& o1, const Matrix& o2, double alpha1) {
  if (o1.rows() != o2.rows() || o1.cols() != o2.cols()) throw DimensionError("fuse: shape mismatch");
  if (alpha1 < 0.0 || alpha1 > 1.0) throw ParameterError("fuse: alpha1 must lie in [0, 1]");
  return alpha1 * o1 + (1.0 - alpha1) * o2;
}

}  // namespace ccafuse

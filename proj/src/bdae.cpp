#include "ccafuse/bdae.hpp"

#include <cmath>
#include <string>

namespace ccafuse {

namespace {

Matrix sigmoid(const Matrix& z) {
  return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

}  // namespace

Rbm make_rbm(Eigen::Index visible, Eigen::Index hidden, RandomStream& rng) {
  if (visible < 1 || hidden < 1) throw ParameterError("rbm: unit counts must be >= 1");
  Rbm rbm;
  rbm.weights = 0.01 * normal_matrix(rng, visible, hidden);
  rbm.visible_bias = Vector::Zero(visible);
  rbm.hidden_bias = Vector::Zero(hidden);
  return rbm;
}

double energy(const Rbm& rbm, const Vector& v, const Vector& h) {
  if (v.size() != rbm.visible() || h.size() != rbm.hidden()) throw DimensionError("rbm energy: state size mismatch");
  return -v.dot(rbm.weights * h) - rbm.visible_bias.dot(v) - rbm.hidden_bias.dot(h);
}

Matrix hidden_probabilities(const Rbm& rbm, const Matrix& v) {
  if (v.cols() != rbm.visible()) throw DimensionError("rbm: visible width mismatch");
  return sigmoid((v * rbm.weights).rowwise() + rbm.hidden_bias.transpose());
}

Matrix visible_probabilities(const Rbm& rbm, const Matrix& h) {
  if (h.cols() != rbm.hidden()) throw DimensionError("rbm: hidden width mismatch");
  return sigmoid((h * rbm.weights.transpose()).rowwise() + rbm.visible_bias.transpose());
}

namespace {

Vector bits(std::uint32_t mask, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = (mask >> i) & 1u ? 1.0 : 0.0;
  return v;
}

}  // namespace

double partition_function(const Rbm& rbm) {
  const Eigen::Index m = rbm.visible();
  const Eigen::Index n = rbm.hidden();
  if (m + n > 20) throw ParameterError("partition_function: machine too large for enumeration");
  double z = 0.0;
  for (std::uint32_t vm = 0; vm < (1u << m); ++vm) {
    const Vector v = bits(vm, m);
    for (std::uint32_t hm = 0; hm < (1u << n); ++hm) z += std::exp(-energy(rbm, v, bits(hm, n)));
  }
  return z;
}

double joint_probability(const Rbm& rbm, const Vector& v, const Vector& h, double partition) {
  return std::exp(-energy(rbm, v, h)) / partition;
}

void require_unit_interval(const Matrix& x, std::string_view what) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double value = x(i, j);
      if (!(value >= 0.0 && value <= 1.0)) {
        throw ContractError(std::string(what) + ": column " + std::to_string(j) + " has value " +
                            std::to_string(value) + " outside [0, 1] (row " + std::to_string(i) + ")");
      }
    }
  }
}

Cd1Statistics cd1_statistics(const Rbm& rbm, const Matrix& batch, RandomStream& rng) {
  require_unit_interval(batch, "cd1");
  if (batch.rows() < 1) throw DimensionError("cd1: empty batch");
  const Matrix h_pos = hidden_probabilities(rbm, batch);
  Matrix h_sample(h_pos.rows(), h_pos.cols());
  for (Eigen::Index i = 0; i < h_pos.rows(); ++i)
    for (Eigen::Index j = 0; j < h_pos.cols(); ++j) h_sample(i, j) = rng.uniform() < h_pos(i, j) ? 1.0 : 0.0;
  Cd1Statistics s;
  s.reconstruction = visible_probabilities(rbm, h_sample);
  const Matrix h_neg = hidden_probabilities(rbm, s.reconstruction);
  const double inv = 1.0 / static_cast<double>(batch.rows());
  s.grad_weights = (batch.transpose() * h_pos - s.reconstruction.transpose() * h_neg) * inv;
  s.grad_visible = (batch - s.reconstruction).colwise().sum().transpose() * inv;
  s.grad_hidden = (h_pos - h_neg).colwise().sum().transpose() * inv;
  s.reconstruction_error = (batch - s.reconstruction).squaredNorm() / static_cast<double>(batch.size());
  return s;
}

Cd1Statistics cd1_update(Rbm& rbm, const Matrix& batch, double lr, RandomStream& rng) {
  if (lr < 0.0) throw ParameterError("cd1: negative learning rate");
  Cd1Statistics s = cd1_statistics(rbm, batch, rng);
  if (lr > 0.0) {
    rbm.weights += lr * s.grad_weights;
    rbm.visible_bias += lr * s.grad_visible;
    rbm.hidden_bias += lr * s.grad_hidden;
    if (!rbm.weights.allFinite() || !rbm.visible_bias.allFinite() || !rbm.hidden_bias.allFinite()) {
      throw TrainingError("cd1: non-finite parameters after update");
    }
  }
  return s;
}

double reconstruction_error(const Rbm& rbm, const Matrix& x) {
  const Matrix recon = visible_probabilities(rbm, hidden_probabilities(rbm, x));
  return (x - recon).squaredNorm() / static_cast<double>(x.size());
}

Rbm train_rbm(const Matrix& x, const RbmTrainConfig& config, RandomStream& rng, std::vector<double>* curve) {
  require_unit_interval(x, "rbm train");
  if (config.epochs < 0 || config.batch_size < 1 || config.learning_rate < 0.0) {
    throw ParameterError("rbm train: invalid configuration");
  }
  Rbm rbm = make_rbm(x.cols(), config.hidden, rng);
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      cd1_update(rbm, select_rows(x, rows), config.learning_rate, rng);
    }
    if (curve != nullptr) curve->push_back(reconstruction_error(rbm, x));
  }
  return rbm;
}

void BdaeConfig::validate() const {
  if (hidden1 < 1 || hidden2 < 1 || shared < 1) throw ParameterError("bdae: layer sizes must be >= 1");
  if (pretrain_epochs < 0 || finetune_epochs < 0) throw ParameterError("bdae: negative epoch count");
  if (pretrain_batch_size < 1) throw ParameterError("bdae: pretrain batch size must be >= 1");
  if (pretrain_learning_rate < 0.0) throw ParameterError("bdae: negative pretrain learning rate");
  finetune.validate();
}

namespace {

Network encoder_from(const Rbm& rbm) {
  return Network({DenseLayer{rbm.weights, rbm.hidden_bias, Activation::sigmoid}});
}

Network decoder_from(const Rbm& rbm) {
  return Network({DenseLayer{rbm.weights.transpose(), rbm.visible_bias, Activation::sigmoid}});
}

struct Pass {
  Tape e1, e2, se, sd, d1, d2;
  Matrix y1, y2;
};

Pass forward_pass(const BdaeModel& m, const Matrix& x1, const Matrix& x2) {
  Pass p;
  const Matrix h1 = m.encoder1.forward(x1, p.e1);
  const Matrix h2 = m.encoder2.forward(x2, p.e2);
  Matrix h(h1.rows(), h1.cols() + h2.cols());
  h << h1, h2;
  const Matrix s = m.shared_encoder.forward(h, p.se);
  const Matrix r = m.shared_decoder.forward(s, p.sd);
  p.y1 = m.decoder1.forward(r.leftCols(h1.cols()), p.d1);
  p.y2 = m.decoder2.forward(r.rightCols(h2.cols()), p.d2);
  return p;
}

}  // namespace

BdaeModel train_bdae(const Matrix& x1, const Matrix& x2, const BdaeConfig& config, RandomStream& rng,
                     Warnings* warnings) {
  config.validate();
  if (x1.rows() != x2.rows()) throw DimensionError("bdae train: views have different sample counts");
  require_unit_interval(x1, "bdae train (view 1)");
  require_unit_interval(x2, "bdae train (view 2)");

  RandomStream pre_rng = rng.substream("pretrain");
  RandomStream order_rng = rng.substream("finetune-order");

  BdaeModel model;
  RbmTrainConfig rc{config.hidden1, config.pretrain_epochs, config.pretrain_learning_rate,
                    config.pretrain_batch_size};
  model.rbm1 = train_rbm(x1, rc, pre_rng);
  rc.hidden = config.hidden2;
  model.rbm2 = train_rbm(x2, rc, pre_rng);
  const Matrix h1 = hidden_probabilities(model.rbm1, x1);
  const Matrix h2 = hidden_probabilities(model.rbm2, x2);
  Matrix h(h1.rows(), h1.cols() + h2.cols());
  h << h1, h2;
  rc.hidden = config.shared;
  model.joint = train_rbm(h, rc, pre_rng);

  model.encoder1 = encoder_from(model.rbm1);
  model.encoder2 = encoder_from(model.rbm2);
  model.shared_encoder = encoder_from(model.joint);
  model.shared_decoder = decoder_from(model.joint);
  model.decoder1 = decoder_from(model.rbm1);
  model.decoder2 = decoder_from(model.rbm2);
  model.pretrain_error = reconstruction_error(model, x1, x2);

  std::vector<Network*> nets{&model.encoder1, &model.encoder2, &model.shared_encoder,
                             &model.shared_decoder, &model.decoder1, &model.decoder2};
  std::vector<Optimizer> opts(nets.size(), Optimizer(config.finetune));
  const auto n = static_cast<std::size_t>(x1.rows());
  const auto batch = static_cast<std::size_t>(config.finetune.batch_size);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  const double w1 = 1.0 / static_cast<double>(x1.cols());
  const double w2 = 1.0 / static_cast<double>(x2.cols());

  for (int epoch = 1; epoch <= config.finetune_epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix b1 = select_rows(x1, rows);
      const Matrix b2 = select_rows(x2, rows);
      Pass p = forward_pass(model, b1, b2);
      const double scale = 2.0 / static_cast<double>(rows.size());
      Matrix g_r1;
      Matrix g_r2;
      const Gradients gd1 = model.decoder1.backward(p.d1, scale * w1 * (p.y1 - b1), &g_r1);
      const Gradients gd2 = model.decoder2.backward(p.d2, scale * w2 * (p.y2 - b2), &g_r2);
      Matrix g_r(g_r1.rows(), g_r1.cols() + g_r2.cols());
      g_r << g_r1, g_r2;
      Matrix g_s;
      const Gradients gsd = model.shared_decoder.backward(p.sd, g_r, &g_s);
      Matrix g_h;
      const Gradients gse = model.shared_encoder.backward(p.se, g_s, &g_h);
      const Eigen::Index c1 = model.encoder1.output_dim();
      const Gradients ge1 = model.encoder1.backward(p.e1, g_h.leftCols(c1));
      const Gradients ge2 = model.encoder2.backward(p.e2, g_h.rightCols(g_h.cols() - c1));
      const std::vector<const Gradients*> grads{&ge1, &ge2, &gse, &gsd, &gd1, &gd2};
      try {
        for (std::size_t k = 0; k < nets.size(); ++k) opts[k].step(*nets[k], *grads[k]);
      } catch (const TrainingError& e) {
        throw TrainingError("bdae fine-tune: diverged at epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    const double err = reconstruction_error(model, x1, x2);
    if (!std::isfinite(err)) {
      throw TrainingError("bdae fine-tune: non-finite reconstruction error at epoch " + std::to_string(epoch));
    }
    model.finetune_curve.push_back(err);
  }
  if (!model.finetune_curve.empty() && model.finetune_curve.back() > model.pretrain_error) {
    warn(warnings, "bdae: fine-tuning increased reconstruction error");
  }
  return model;
}

Matrix encode(const BdaeModel& model, const Matrix& x1, const Matrix& x2) {
  if (x1.rows() != x2.rows()) throw DimensionError("bdae encode: views have different sample counts");
  const Matrix h1 = model.encoder1.forward(x1);
  const Matrix h2 = model.encoder2.forward(x2);
  Matrix h(h1.rows(), h1.cols() + h2.cols());
  h << h1, h2;
  return model.shared_encoder.forward(h);
}

std::pair<Matrix, Matrix> reconstruct(const BdaeModel& model, const Matrix& x1, const Matrix& x2) {
  Pass p = forward_pass(model, x1, x2);
  return {std::move(p.y1), std::move(p.y2)};
}

double reconstruction_error(const BdaeModel& model, const Matrix& x1, const Matrix& x2) {
  auto [y1, y2] = reconstruct(model, x1, x2);
  return (y1 - x1).squaredNorm() / static_cast<double>(x1.size()) +
         (y2 - x2).squaredNorm() / static_cast<double>(x2.size());
}

}  // namespace ccafuse

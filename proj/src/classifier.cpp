#include "ccafuse/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ccafuse/errors.hpp"

namespace ccafuse {

void SvmConfig::validate() const {
  if (!(c > 0.0)) throw ParameterError("svm: C must be positive");
  if (epochs < 1) throw ParameterError("svm: epochs must be >= 1");
  if (batch_size < 1) throw ParameterError("svm: batch size must be >= 1");
  if (!(initial_step > 0.0)) throw ParameterError("svm: initial step must be positive");
}

namespace {

double objective(const Matrix& x, const Matrix& targets, const Matrix& w, const Vector& b, double lambda) {
  const Matrix margins = ((x * w).rowwise() + b.transpose()).cwiseProduct(targets);
  const double hinge = (1.0 - margins.array()).cwiseMax(0.0).sum() / static_cast<double>(x.rows());
  return 0.5 * lambda * w.squaredNorm() + hinge;
}

}  // namespace

SvmModel train_svm(const Matrix& x, const Labels& y, const SvmConfig& config, RandomStream& rng) {
  config.validate();
  require_finite(x, "svm train");
  if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw DimensionError("svm train: label count mismatch");
  std::set<int> present(y.begin(), y.end());
  if (*present.begin() < 0) throw ParameterError("svm train: negative label");
  if (present.size() < 2) throw ParameterError("svm train: need at least two classes");
  const Eigen::Index classes = *present.rbegin() + 1;
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();

  Matrix targets = Matrix::Constant(n, classes, -1.0);
  for (Eigen::Index i = 0; i < n; ++i) targets(i, y[static_cast<std::size_t>(i)]) = 1.0;

  const double lambda = 1.0 / (config.c * static_cast<double>(n));
  Matrix w = Matrix::Zero(d, classes);
  Vector b = Vector::Zero(classes);
  Matrix w_avg = w;
  Vector b_avg = b;
  std::size_t t = 0;

  SvmModel model;
  model.c = config.c;
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const auto m = static_cast<Eigen::Index>(end - start);
      Matrix xb(m, d);
      Matrix tb(m, classes);
      for (Eigen::Index r = 0; r < m; ++r) {
        const auto i = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(r)]);
        xb.row(r) = x.row(i);
        tb.row(r) = targets.row(i);
      }
      const Matrix margins = ((xb * w).rowwise() + b.transpose()).cwiseProduct(tb);
      // Subgradient of the hinge: -y x on active samples.
      const Matrix active = (margins.array() < 1.0).cast<double>().matrix().cwiseProduct(tb);
      const Matrix hinge_w = -xb.transpose() * active / static_cast<double>(m);
      const Vector grad_b = -active.colwise().sum().transpose() / static_cast<double>(m);
      ++t;
      const double eta = config.initial_step / std::sqrt(static_cast<double>(t));
      // Hinge step, then the ridge term in closed (proximal) form: stable for any lambda.
      w = (w - eta * hinge_w) / (1.0 + eta * lambda);
      b -= eta * grad_b;
      const double mix = 1.0 / static_cast<double>(t);
      w_avg += mix * (w - w_avg);
      b_avg += mix * (b - b_avg);
    }
    model.objective_curve.push_back(objective(x, targets, w_avg, b_avg, lambda));
  }
  model.weights = std::move(w_avg);
  model.bias = std::move(b_avg);
  return model;
}

Matrix decision_function(const SvmModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw DimensionError("svm: input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.input_dim()));
  }
  return (x * model.weights).rowwise() + model.bias.transpose();
}

Labels predict(const SvmModel& model, const Matrix& x) {
  const Matrix scores = decision_function(model, x);
  Labels out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Matrix predict_proba(const SvmModel& model, const Matrix& x) {
  Matrix scores = decision_function(model, x);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - top).exp();
    scores.row(i) /= scores.row(i).sum();
  }
  return scores;
}

double accuracy(const Labels& truth, const Labels& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw DimensionError("accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == predicted[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace ccafuse

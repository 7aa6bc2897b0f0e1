#include "ccafuse/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccafuse/errors.hpp"

namespace ccafuse {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerMethod m) {
  return m == OptimizerMethod::sgd ? "sgd" : "rmsprop";
}

OptimizerMethod parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerMethod::sgd;
  if (name == "rmsprop") return OptimizerMethod::rmsprop;
  throw ParameterError("unknown optimizer '" + std::string(name) + "'");
}

namespace {

void activate(Matrix& z, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the activation output y.
void apply_derivative(Matrix& grad, const Matrix& y, Activation a) {
  switch (a) {
    case Activation::identity: break;
    case Activation::sigmoid: grad.array() *= y.array() * (1.0 - y.array()); break;
    case Activation::tanh: grad.array() *= 1.0 - y.array().square(); break;
    case Activation::relu: grad.array() *= (y.array() > 0.0).cast<double>(); break;
  }
}

}  // namespace

Gradients Gradients::zeros_like(const Network& net) {
  Gradients g;
  for (const auto& layer : net.layers()) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.biases.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] += other.weights[i];
    biases[i] += other.biases[i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] *= s;
    biases[i] *= s;
  }
  return *this;
}

bool Gradients::all_finite() const {
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
  return true;
}

double Gradients::squared_norm() const {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    total += weights[i].squaredNorm() + biases[i].squaredNorm();
  return total;
}

Network::Network(std::span<const LayerSpec> specs, RandomStream& rng) {
  if (specs.empty()) throw ParameterError("network: no layers");
  for (const auto& spec : specs) {
    if (spec.input_dim < 1 || spec.output_dim < 1) throw ParameterError("network: layer dims must be >= 1");
    DenseLayer layer;
    const double limit = std::sqrt(6.0 / static_cast<double>(spec.input_dim + spec.output_dim));
    layer.weights.resize(spec.input_dim, spec.output_dim);
    for (Eigen::Index i = 0; i < spec.input_dim; ++i)
      for (Eigen::Index j = 0; j < spec.output_dim; ++j) layer.weights(i, j) = rng.uniform(-limit, limit);
    layer.bias = Vector::Zero(spec.output_dim);
    layer.activation = spec.activation;
    layers_.push_back(std::move(layer));
  }
  check_chain();
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ParameterError("network: no layers");
  check_chain();
}

void Network::check_chain() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    if (layer.weights.rows() < 1 || layer.weights.cols() < 1) {
      throw ParameterError("network: layer " + std::to_string(i) + " has an empty weight matrix");
    }
    if (layer.bias.size() != layer.weights.cols()) {
      throw DimensionError("network: layer " + std::to_string(i) + " bias size mismatch");
    }
    if (i > 0 && layers_[i - 1].weights.cols() != layer.weights.rows()) {
      throw DimensionError("network: layer " + std::to_string(i) + " input does not chain");
    }
  }
}

Eigen::Index Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().weights.rows(); }
Eigen::Index Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().weights.cols(); }

Matrix Network::forward(const Matrix& x) const {
  if (layers_.empty()) throw ContractError("network: forward on empty network");
  if (x.cols() != input_dim()) {
    throw DimensionError("network: input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(input_dim()));
  }
  Matrix h = x;
  for (const auto& layer : layers_) {
    Matrix z = h * layer.weights;
    z.rowwise() += layer.bias.transpose();
    activate(z, layer.activation);
    h = std::move(z);
  }
  return h;
}

Matrix Network::forward(const Matrix& x, Tape& tape) const {
  if (layers_.empty()) throw ContractError("network: forward on empty network");
  if (x.cols() != input_dim()) {
    throw DimensionError("network: input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(input_dim()));
  }
  tape.values.clear();
  tape.values.reserve(layers_.size() + 1);
  tape.values.push_back(x);
  for (const auto& layer : layers_) {
    Matrix z = tape.values.back() * layer.weights;
    z.rowwise() += layer.bias.transpose();
    activate(z, layer.activation);
    tape.values.push_back(std::move(z));
  }
  tape.version = version_;
  return tape.values.back();
}

Gradients Network::backward(const Tape& tape, const Matrix& upstream, Matrix* input_grad) const {
  if (tape.version != version_ || tape.values.size() != layers_.size() + 1) {
    throw ContractError("network: stale tape (parameters changed since the forward pass)");
  }
  const Matrix& out = tape.values.back();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
    throw DimensionError("network: upstream gradient shape does not match output");
  }
  Gradients g;
  g.weights.resize(layers_.size());
  g.biases.resize(layers_.size());
  Matrix delta = upstream;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& layer = layers_[li];
    apply_derivative(delta, tape.values[li + 1], layer.activation);
    g.weights[li] = tape.values[li].transpose() * delta;
    g.biases[li] = delta.colwise().sum().transpose();
    if (li > 0 || input_grad != nullptr) {
      Matrix next = delta * layer.weights.transpose();
      delta = std::move(next);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(delta);
  return g;
}

DenseLayer& Network::mutable_layer(std::size_t i) {
  ++version_;
  return layers_.at(i);
}

void Network::add_scaled(const Gradients& delta, double scale) {
  if (delta.weights.size() != layers_.size()) throw DimensionError("network: gradient layer count mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weights += scale * delta.weights[i];
    layers_[i].bias += scale * delta.biases[i];
  }
  ++version_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!layers_[i].weights.allFinite() || !layers_[i].bias.allFinite()) {
      throw TrainingError("network: non-finite parameters in layer " + std::to_string(i) + " after update");
    }
  }
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

std::pair<std::size_t, std::size_t> Network::locate(std::size_t flat, bool& is_bias) const {
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto nw = static_cast<std::size_t>(layers_[li].weights.size());
    const auto nb = static_cast<std::size_t>(layers_[li].bias.size());
    if (flat < nw) {
      is_bias = false;
      return {li, flat};
    }
    flat -= nw;
    if (flat < nb) {
      is_bias = true;
      return {li, flat};
    }
    flat -= nb;
  }
  throw DimensionError("network: parameter index out of range");
}

double Network::parameter(std::size_t flat) const {
  bool is_bias = false;
  auto [li, k] = locate(flat, is_bias);
  const auto& layer = layers_[li];
  return is_bias ? layer.bias(static_cast<Eigen::Index>(k))
                 : layer.weights.data()[k];
}

void Network::set_parameter(std::size_t flat, double value) {
  bool is_bias = false;
  auto [li, k] = locate(flat, is_bias);
  auto& layer = layers_[li];
  if (is_bias) {
    layer.bias(static_cast<Eigen::Index>(k)) = value;
  } else {
    layer.weights.data()[k] = value;
  }
  ++version_;
}

std::vector<LayerSpec> make_layer_specs(Eigen::Index input_dim, std::span<const int> hidden,
                                        Eigen::Index output_dim, Activation hidden_activation,
                                        Activation output_activation) {
  std::vector<LayerSpec> specs;
  Eigen::Index prev = input_dim;
  for (int h : hidden) {
    specs.push_back({prev, h, hidden_activation});
    prev = h;
  }
  specs.push_back({prev, output_dim, output_activation});
  return specs;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ParameterError("optimizer: learning rate must be positive");
  if (batch_size < 2) throw ParameterError("optimizer: batch size must be at least 2");
  if (momentum < 0.0 || momentum >= 1.0) throw ParameterError("optimizer: momentum must lie in [0, 1)");
  if (decay <= 0.0 || decay >= 1.0) throw ParameterError("optimizer: decay must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ParameterError("optimizer: epsilon must be positive");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(Network& net, const Gradients& grads) {
  if (grads.weights.size() != net.layers().size()) throw DimensionError("optimizer: gradient layer count mismatch");
  if (!grads.all_finite()) {
    throw TrainingError("optimizer: non-finite gradient at step " + std::to_string(steps_) +
                        " (squared norm " + std::to_string(grads.squared_norm()) + ")");
  }
  if (!initialized_) {
    state_ = Gradients::zeros_like(net);
    initialized_ = true;
  }
  const double lr = config_.learning_rate;
  Gradients update = Gradients::zeros_like(net);
  for (std::size_t i = 0; i < grads.weights.size(); ++i) {
    if (config_.method == OptimizerMethod::sgd) {
      if (config_.momentum > 0.0) {
        state_.weights[i] = config_.momentum * state_.weights[i] + grads.weights[i];
        state_.biases[i] = config_.momentum * state_.biases[i] + grads.biases[i];
        update.weights[i] = state_.weights[i];
        update.biases[i] = state_.biases[i];
      } else {
        update.weights[i] = grads.weights[i];
        update.biases[i] = grads.biases[i];
      }
    } else {
      const double rho = config_.decay;
      state_.weights[i] = rho * state_.weights[i] + (1.0 - rho) * grads.weights[i].cwiseAbs2();
      state_.biases[i] = rho * state_.biases[i] + (1.0 - rho) * grads.biases[i].cwiseAbs2();
      update.weights[i] =
          grads.weights[i].array() / (state_.weights[i].array().sqrt() + config_.epsilon);
      update.biases[i] = grads.biases[i].array() / (state_.biases[i].array().sqrt() + config_.epsilon);
    }
  }
  net.add_scaled(update, -lr);
  ++steps_;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const Network& net, const LossFn& loss, const Matrix& x, double tolerance,
                           RandomStream& rng, std::size_t max_params, double step) {
  Network probe = net;
  Tape tape;
  const Matrix out = probe.forward(x, tape);
  const Matrix upstream = loss(out).second;
  const Gradients analytic = probe.backward(tape, upstream);

  // Flatten analytic gradients in the same order as Network::parameter.
  std::vector<double> flat;
  flat.reserve(probe.parameter_count());
  for (std::size_t li = 0; li < analytic.weights.size(); ++li) {
    const Matrix& w = analytic.weights[li];
    flat.insert(flat.end(), w.data(), w.data() + w.size());
    const Vector& b = analytic.biases[li];
    flat.insert(flat.end(), b.data(), b.data() + b.size());
  }

  std::vector<std::size_t> indices(flat.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  if (indices.size() > max_params) {
    rng.shuffle(indices);
    indices.resize(max_params);
    std::sort(indices.begin(), indices.end());
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t p : indices) {
    const double original = probe.parameter(p);
    probe.set_parameter(p, original + step);
    const double up = loss(probe.forward(x)).first;
    probe.set_parameter(p, original - step);
    const double down = loss(probe.forward(x)).first;
    probe.set_parameter(p, original);
    const double numeric = (up - down) / (2.0 * step);
    report.max_relative_error = std::max(report.max_relative_error, relative_error(flat[p], numeric));
    ++report.checked;
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace ccafuse

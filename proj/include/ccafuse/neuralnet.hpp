#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ccafuse/numerics.hpp"
#include "ccafuse/random.hpp"

namespace ccafuse {

enum class Activation { identity, sigmoid, tanh, relu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct LayerSpec {
  Eigen::Index input_dim = 1;
  Eigen::Index output_dim = 1;
  Activation activation = Activation::sigmoid;
};

/// y = act(x W + b); rows of x are samples.
struct DenseLayer {
  Matrix weights;  // input_dim x output_dim
  Vector bias;     // output_dim
  Activation activation = Activation::identity;
};

class Network;

/// Per-layer parameter gradients, same shapes as the network's layers.
struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static Gradients zeros_like(const Network& net);
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  bool all_finite() const;
  double squared_norm() const;
};

/// Activations cached by a forward pass. `values[0]` is the input and
/// `values[i + 1]` the output of layer i. Only valid for the network version
/// it was recorded against.
struct Tape {
  std::vector<Matrix> values;
  std::uint64_t version = 0;
};

/// Stack of dense layers.
class Network {
 public:
  Network() = default;
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  Network(std::span<const LayerSpec> specs, RandomStream& rng);
  explicit Network(std::vector<DenseLayer> layers);

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Tape& tape) const;

  /// Backpropagate dLoss/dOutput. If `input_grad` is non-null it receives
  /// dLoss/dInput. Throws ContractError when the tape predates a parameter
  /// update.
  Gradients backward(const Tape& tape, const Matrix& upstream, Matrix* input_grad = nullptr) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  /// Mutable access invalidates outstanding tapes.
  DenseLayer& mutable_layer(std::size_t i);

  /// params += scale * delta; throws TrainingError if any result is non-finite.
  void add_scaled(const Gradients& delta, double scale);

  std::size_t parameter_count() const;
  double parameter(std::size_t flat) const;
  void set_parameter(std::size_t flat, double value);

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  bool empty() const { return layers_.empty(); }
  std::uint64_t version() const { return version_; }

 private:
  void check_chain() const;
  std::pair<std::size_t, std::size_t> locate(std::size_t flat, bool& is_bias) const;

  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

/// Build specs for input -> hidden... -> output with one hidden activation.
std::vector<LayerSpec> make_layer_specs(Eigen::Index input_dim, std::span<const int> hidden,
                                        Eigen::Index output_dim, Activation hidden_activation,
                                        Activation output_activation);

enum class OptimizerMethod { sgd, rmsprop };

std::string_view to_string(OptimizerMethod m);
OptimizerMethod parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerMethod method = OptimizerMethod::rmsprop;
  double learning_rate = 1e-3;
  int batch_size = 100;
  double momentum = 0.0;  // sgd only
  double decay = 0.9;     // rmsprop squared-gradient decay
  double epsilon = 1e-8;

  void validate() const;
};

/// Stateful first-order optimizer bound to one network's parameter shapes.
/// Steps minimize: w <- w - lr * g for plain sgd.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  void step(Network& net, const Gradients& grads);
  const OptimizerConfig& config() const { return config_; }
  std::size_t steps_taken() const { return steps_; }

 private:
  OptimizerConfig config_;
  Gradients state_;
  bool initialized_ = false;
  std::size_t steps_ = 0;
};

/// Scalar loss of the network output and its gradient w.r.t. that output.
using LossFn = std::function<std::pair<double, Matrix>(const Matrix& output)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Relative error used throughout gradient checks:
/// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double analytic, double numeric);

/// Compare backprop against central differences on up to `max_params`
/// randomly chosen parameters (all of them when the network is smaller).
GradCheckReport grad_check(const Network& net, const LossFn& loss, const Matrix& x, double tolerance,
                           RandomStream& rng, std::size_t max_params = 200, double step = 1e-5);

}  // namespace ccafuse

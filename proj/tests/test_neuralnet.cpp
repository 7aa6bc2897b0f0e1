#include <doctest.h>

#include <cmath>
#include <vector>

#include "ccafuse/errors.hpp"
#include "ccafuse/neuralnet.hpp"

using namespace ccafuse;

namespace {

LossFn quadratic(const Matrix& target) {
  return [target](const Matrix& out) {
    const Matrix diff = out - target;
    return std::make_pair(0.5 * diff.squaredNorm(), Matrix(diff));
  };
}

Network single(const Matrix& w, const Vector& b, Activation a) { return Network({DenseLayer{w, b, a}}); }

}  // namespace

TEST_CASE("forward") {
  Matrix x(2, 3);
  x << 1, 2, 3, -4, 5, 6;
  CHECK(single(Matrix::Identity(3, 3), Vector::Zero(3), Activation::identity).forward(x) == x);
  const Matrix half = single(Matrix::Zero(3, 2), Vector::Zero(2), Activation::sigmoid).forward(x);
  CHECK((half.array() == 0.5).all());

  RandomStream rng(1);
  const Matrix w1 = normal_matrix(rng, 3, 4), w2 = normal_matrix(rng, 4, 2);
  const Vector b1 = normal_matrix(rng, 4, 1).col(0), b2 = normal_matrix(rng, 2, 1).col(0);
  const Network a = single(w1, b1, Activation::tanh);
  const Network b = single(w2, b2, Activation::sigmoid);
  const Network both({DenseLayer{w1, b1, Activation::tanh}, DenseLayer{w2, b2, Activation::sigmoid}});
  CHECK((both.forward(x) - b.forward(a.forward(x))).norm() < 1e-15);
  CHECK(both.forward(x) == both.forward(x));
  CHECK_THROWS_AS(both.forward(Matrix::Zero(2, 4)), DimensionError);
}

TEST_CASE("backward") {
  RandomStream rng(2);
  const std::vector<int> hidden{5};
  const auto specs = make_layer_specs(3, hidden, 2, Activation::sigmoid, Activation::identity);
  Network net(specs, rng);
  const Matrix x = normal_matrix(rng, 6, 3);
  Tape tape;
  const Matrix out = net.forward(x, tape);
  const Gradients zero = net.backward(tape, Matrix::Zero(out.rows(), out.cols()));
  CHECK(zero.squared_norm() == 0.0);

  const Matrix w = normal_matrix(rng, 3, 2);
  const Network lin = single(w, Vector::Zero(2), Activation::identity);
  Tape lt;
  lin.forward(x, lt);
  const Matrix up = normal_matrix(rng, 6, 2);
  const Gradients g = lin.backward(lt, up);
  CHECK((g.weights[0] - x.transpose() * up).norm() < 1e-12);
  CHECK((g.biases[0] - up.colwise().sum().transpose()).norm() < 1e-12);

  // Parameters changed after the forward pass: the tape is stale.
  net.mutable_layer(0).bias(0) += 1.0;
  CHECK_THROWS_AS(net.backward(tape, Matrix::Zero(out.rows(), out.cols())), ContractError);
}

TEST_CASE("grad_check") {
  RandomStream rng(3);
  const Matrix x = normal_matrix(rng, 8, 3);
  const Matrix target = normal_matrix(rng, 8, 2);

  const Network lin = single(normal_matrix(rng, 3, 2), Vector::Zero(2), Activation::identity);
  CHECK(grad_check(lin, quadratic(target), x, 1e-7, rng).max_relative_error < 1e-7);

  const std::vector<int> hidden{4};
  Network relu_net(make_layer_specs(3, hidden, 2, Activation::relu, Activation::identity), rng);
  CHECK(grad_check(relu_net, quadratic(target), x, 1e-4, rng).passed);

  // Negative control: a loss whose reported gradient is 10% too large.
  const LossFn wrong = [&](const Matrix& out) {
    auto [v, g] = quadratic(target)(out);
    return std::make_pair(v, Matrix(1.1 * g));
  };
  CHECK_FALSE(grad_check(relu_net, wrong, x, 1e-4, rng).passed);
}

TEST_CASE("backprop exactness across activations and depths") {
  RandomStream rng(4);
  int passed = 0, total = 0;
  for (Activation act : {Activation::identity, Activation::sigmoid, Activation::tanh, Activation::relu}) {
    for (int depth = 1; depth <= 4; ++depth) {
      for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> hidden(static_cast<std::size_t>(depth - 1), 2 + static_cast<int>(rng.index(4)));
        const Eigen::Index in = 1 + static_cast<Eigen::Index>(rng.index(4));
        const Eigen::Index out = 1 + static_cast<Eigen::Index>(rng.index(3));
        Network net(make_layer_specs(in, hidden, out, act, act), rng);
        // Random biases: with zero biases a fully dead relu layer puts the next pre-activation exactly on the kink.
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
          auto& layer = net.mutable_layer(l);
          layer.bias = normal_matrix(rng, layer.bias.size(), 1).col(0);
        }
        const Matrix x = normal_matrix(rng, 5, in);
        const Matrix target = normal_matrix(rng, 5, out);
        ++total;
        passed += grad_check(net, quadratic(target), x, 1e-4, rng).passed ? 1 : 0;
      }
    }
  }
  CHECK(passed == total);
}

TEST_CASE("optimizer steps") {
  Network net = single(Matrix::Ones(1, 1), Vector::Zero(1), Activation::identity);
  OptimizerConfig sgd{OptimizerMethod::sgd, 0.1, 2, 0.0, 0.9, 1e-8};
  Optimizer opt(sgd);
  Gradients g = Gradients::zeros_like(net);
  g.weights[0](0, 0) = 2.0;
  opt.step(net, g);
  CHECK(net.layers()[0].weights(0, 0) == doctest::Approx(0.8));

  const Network before = net;
  opt.step(net, Gradients::zeros_like(net));
  CHECK(net.layers()[0].weights == before.layers()[0].weights);

  // RMSprop with a constant gradient: the step size tends to the learning rate.
  Network r = single(Matrix::Zero(1, 1), Vector::Zero(1), Activation::identity);
  Optimizer rms(OptimizerConfig{OptimizerMethod::rmsprop, 0.01, 2, 0.0, 0.9, 1e-8});
  Gradients c = Gradients::zeros_like(r);
  c.weights[0](0, 0) = 3.0;
  double last = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double w0 = r.layers()[0].weights(0, 0);
    rms.step(r, c);
    last = w0 - r.layers()[0].weights(0, 0);
  }
  CHECK(last == doctest::Approx(0.01).epsilon(1e-6));

  Gradients bad = Gradients::zeros_like(net);
  bad.weights[0](0, 0) = std::nan("");
  CHECK_THROWS_AS(opt.step(net, bad), TrainingError);
  CHECK(std::isfinite(net.layers()[0].weights(0, 0)));

  OptimizerConfig tiny = sgd;
  tiny.batch_size = 1;
  CHECK_THROWS_AS(tiny.validate(), ParameterError);
  tiny = sgd;
  tiny.learning_rate = 0.0;
  CHECK_THROWS_AS(tiny.validate(), ParameterError);
}

TEST_CASE("flat parameter access") {
  RandomStream rng(5);
  const std::vector<int> hidden{3};
  Network net(make_layer_specs(2, hidden, 1, Activation::tanh, Activation::identity), rng);
  CHECK(net.parameter_count() == 2 * 3 + 3 + 3 * 1 + 1);
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    const double v = net.parameter(i);
    net.set_parameter(i, v + 1.0);
    CHECK(net.parameter(i) == v + 1.0);
  }
  // Glorot-uniform initial weights lie within the limit.
  Network fresh(make_layer_specs(10, hidden, 1, Activation::tanh, Activation::identity), rng);
  CHECK(fresh.layers()[0].weights.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 13.0));
}

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adp/errors.hpp"

namespace adp {

struct DenseLayer {
  Eigen::MatrixXd weight;  // fan_out x fan_in
  Eigen::VectorXd bias;
};

// A tanh multilayer perceptron with an identity output layer. Gradients and
// optimizer moments reuse this type so they line up tensor by tensor.
struct MlpParams {
  std::vector<DenseLayer> layers;

  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }

  std::size_t num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  // Visits every tensor as a flat span together with its name ("layers.1.weight").
  void for_each_tensor(const std::function<void(const std::string&, std::span<double>)>& fn) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string prefix = "layers." + std::to_string(i) + ".";
      fn(prefix + "weight", {layers[i].weight.data(), static_cast<std::size_t>(layers[i].weight.size())});
      fn(prefix + "bias", {layers[i].bias.data(), static_cast<std::size_t>(layers[i].bias.size())});
    }
  }

  void for_each_tensor(const std::function<void(const std::string&, std::span<const double>)>& fn) const {
    const_cast<MlpParams*>(this)->for_each_tensor(
        [&](const std::string& name, std::span<double> t) { fn(name, t); });
  }

  MlpParams zeros_like() const {
    MlpParams z;
    for (const auto& l : layers)
      z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                          Eigen::VectorXd::Zero(l.bias.size())});
    return z;
  }

  bool operator==(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& a = layers[i];
      const auto& b = other.layers[i];
      if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
          a.bias.size() != b.bias.size() || a.weight != b.weight || a.bias != b.bias)
        return false;
    }
    return true;
  }
};

inline MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim) {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("network dimensions must be >= 1");
  MlpParams p;
  int fan_in = input_dim;
  auto add = [&](int fan_out) {
    p.layers.push_back({Eigen::MatrixXd::Zero(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)});
    fan_in = fan_out;
  };
  for (int h : hidden) add(h);
  add(output_dim);
  return p;
}

// tanh(z) = 1 - 2 / (exp(2z) + 1). Eigen vectorizes exp but not tanh for
// doubles; the two agree to a few ulp and saturate the same way.
inline Eigen::MatrixXd tanh_activation(const Eigen::MatrixXd& z) {
  return (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

// Post-activation values of every layer for one batch; column j is sample j.
struct MlpTape {
  std::vector<Eigen::MatrixXd> activations;
};

inline Eigen::MatrixXd mlp_forward(const MlpParams& net, const Eigen::MatrixXd& inputs, MlpTape* tape = nullptr) {
  if (inputs.rows() != net.input_dim())
    throw InputError("network expects inputs of dimension " + std::to_string(net.input_dim()) + ", got " +
                     std::to_string(inputs.rows()));
  if (!inputs.allFinite()) throw InputError("non-finite network input");
  Eigen::MatrixXd x = inputs;
  if (tape) {
    tape->activations.clear();
    tape->activations.push_back(x);
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    Eigen::MatrixXd z = layer.weight * x;
    z.colwise() += layer.bias;
    if (i + 1 < net.layers.size()) z = tanh_activation(z);
    x = std::move(z);
    if (tape) tape->activations.push_back(x);
  }
  return x;
}

// Reverse pass: given dLoss/dOutput for the taped batch, returns dLoss/dParams.
inline MlpParams mlp_backward(const MlpParams& net, const MlpTape& tape, const Eigen::MatrixXd& d_output) {
  MlpParams grads = net.zeros_like();
  Eigen::MatrixXd delta = d_output;
  for (std::size_t k = net.layers.size(); k-- > 0;) {
    const Eigen::MatrixXd& input = tape.activations[k];
    grads.layers[k].weight.noalias() = delta * input.transpose();
    grads.layers[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd upstream = net.layers[k].weight.transpose() * delta;
    // tanh'(z) = 1 - tanh(z)^2, and input holds tanh(z) of the layer below.
    delta = (upstream.array() * (1.0 - input.array().square())).matrix();
  }
  return grads;
}

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  long long step = 0;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

inline AdamState make_adam(const MlpParams& params, double learning_rate = 3e-4) {
  AdamState s;
  s.first_moment = params.zeros_like();
  s.second_moment = params.zeros_like();
  s.learning_rate = learning_rate;
  return s;
}

// Bias-corrected adaptive-moment update.
inline void opt_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
  grads.for_each_tensor([](const std::string& name, std::span<const double> g) {
    for (double v : g)
      if (!std::isfinite(v)) throw NumericalError("non-finite gradient in " + name);
  });
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseAbs2();
      p.array() -= state.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + state.epsilon);
    };
    update(params.layers[i].weight, grads.layers[i].weight, state.first_moment.layers[i].weight,
           state.second_moment.layers[i].weight);
    update(params.layers[i].bias, grads.layers[i].bias, state.first_moment.layers[i].bias,
           state.second_moment.layers[i].bias);
  }
}

}  // namespace adp

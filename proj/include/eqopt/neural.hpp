#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace eqopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { relu, tanh_scaled, sigmoid, linear };

std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

struct Layer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation act = Activation::linear;
  double scale = 1.0;  // k for tanh_scaled
};

/// Fully connected network. Inputs are column vectors; a batch is a matrix
/// with one column per sample.
class DenseNet {
 public:
  DenseNet() = default;

  /// dims = {in, h1, ..., out}; acts has one entry per layer. He-uniform init
  /// for relu layers, Xavier-uniform otherwise, zero biases.
  static DenseNet create(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                         std::mt19937_64& rng, double tanh_scale = 1.0);

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  std::vector<std::size_t> dims() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Bumped on every parameter update; tapes from older versions are stale.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  /// Flattened parameters in layer order: weight (column-major), then bias.
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> p);

  /// Polyak averaging toward `source`: this = tau * source + (1 - tau) * this.
  void soft_update_from(const DenseNet& source, double tau);

 private:
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

/// Cached activations of one forward pass.
struct Tape {
  const DenseNet* net = nullptr;
  std::uint64_t version = 0;
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;  // dL/dx, empty unless requested

  static Gradients zeros_like(const DenseNet& net);
  Gradients& operator+=(const Gradients& other);
  std::vector<double> flat() const;
};

/// Throws ShapeError if x rows differ from the first layer's input size.
Tape forward(const DenseNet& net, const Matrix& x);
/// Output only, no tape.
Matrix predict(const DenseNet& net, const Matrix& x);
Vector predict(const DenseNet& net, const Vector& x);

/// Exact reverse-mode gradients for upstream dL/dy (same shape as the
/// output). Throws TapeError if the tape is not from the current net state.
Gradients backward(const DenseNet& net, const Tape& tape, const Matrix& grad_output, bool input_grad = true);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled: p -= lr * wd * p
};

/// Adam moments for a fixed parameter layout.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::size_t n_params) : config(cfg), m(n_params, 0.0), v(n_params, 0.0) {}
};

/// Bias-corrected Adam step with decoupled weight decay. Throws OptimError on
/// a non-finite gradient (parameters are left untouched).
void adam_step(AdamState& state, DenseNet& net, const Gradients& grads);
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

// Checkpoint layout: {dims, activations, scales, layers[{weight (row-major), bias}]}.
nlohmann::json to_json(const DenseNet& net);
DenseNet dense_net_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdamState& s);
AdamState adam_state_from_json(const nlohmann::json& j);

}  // namespace eqopt

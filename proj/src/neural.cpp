#include "eqopt/neural.hpp"

#include <cmath>

#include "eqopt/errors.hpp"

namespace eqopt {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh_scaled:
      return "tanh_scaled";
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::linear:
      return "linear";
  }
  return "linear";
}

Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh_scaled") return Activation::tanh_scaled;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "linear") return Activation::linear;
  throw DataError("unknown activation '" + s + "'");
}

DenseNet DenseNet::create(const std::vector<std::size_t>& dims, const std::vector<Activation>& acts,
                          std::mt19937_64& rng, double tanh_scale) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw ShapeError("network needs one activation per layer");
  DenseNet net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto fan_in = static_cast<double>(dims[i]);
    const auto fan_out = static_cast<double>(dims[i + 1]);
    const double limit =
        acts[i] == Activation::relu ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(dims[i + 1]), static_cast<Eigen::Index>(dims[i]));
    // Fill row-major so the draw order matches the checkpoint layout.
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = u(rng);
    layer.bias = Vector::Zero(static_cast<Eigen::Index>(dims[i + 1]));
    layer.act = acts[i];
    layer.scale = acts[i] == Activation::tanh_scaled ? tanh_scale : 1.0;
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::size_t DenseNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weight.cols());
}

std::size_t DenseNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weight.rows());
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<std::size_t> DenseNet::dims() const {
  std::vector<std::size_t> d;
  if (layers_.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers_) d.push_back(static_cast<std::size_t>(l.weight.rows()));
  return d;
}

std::vector<double> DenseNet::flat_parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weight.data(), l.weight.data() + l.weight.size());
    p.insert(p.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return p;
}

void DenseNet::set_flat_parameters(std::span<const double> p) {
  if (p.size() != parameter_count()) throw ShapeError("flat parameter vector has the wrong length");
  std::size_t off = 0;
  for (auto& l : layers_) {
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(off), l.weight.size(), l.weight.data());
    off += static_cast<std::size_t>(l.weight.size());
    std::copy_n(p.begin() + static_cast<std::ptrdiff_t>(off), l.bias.size(), l.bias.data());
    off += static_cast<std::size_t>(l.bias.size());
  }
  touch();
}

void DenseNet::soft_update_from(const DenseNet& source, double tau) {
  if (source.layers_.size() != layers_.size()) throw ShapeError("soft update between different architectures");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight = tau * source.layers_[i].weight + (1.0 - tau) * layers_[i].weight;
    layers_[i].bias = tau * source.layers_[i].bias + (1.0 - tau) * layers_[i].bias;
  }
  touch();
}

namespace {

void activate(const Layer& l, const Matrix& z, Matrix& out) {
  switch (l.act) {
    case Activation::relu:
      out = z.cwiseMax(0.0);
      break;
    case Activation::tanh_scaled:
      out = l.scale * z.array().tanh();
      break;
    case Activation::sigmoid:
      out = (1.0 + (-z.array()).exp()).inverse();
      break;
    case Activation::linear:
      out = z;
      break;
  }
}

// dL/dz given dL/da, the pre-activation z and the activation output a.
Matrix activation_grad(const Layer& l, const Matrix& z, const Matrix& a, const Matrix& grad_a) {
  switch (l.act) {
    case Activation::relu:
      return (z.array() > 0.0).select(grad_a.array(), 0.0).matrix();
    case Activation::tanh_scaled: {
      const Eigen::ArrayXXd t = z.array().tanh();
      return (grad_a.array() * l.scale * (1.0 - t.square())).matrix();
    }
    case Activation::sigmoid:
      return (grad_a.array() * a.array() * (1.0 - a.array())).matrix();
    case Activation::linear:
      return grad_a;
  }
  return grad_a;
}

void check_input(const DenseNet& net, const Matrix& x) {
  if (net.layers().empty()) throw ShapeError("network has no layers");
  if (static_cast<std::size_t>(x.rows()) != net.input_dim())
    throw ShapeError("input has " + std::to_string(x.rows()) + " rows, network expects " +
                     std::to_string(net.input_dim()));
}

}  // namespace

Tape forward(const DenseNet& net, const Matrix& x) {
  check_input(net, x);
  Tape tape;
  tape.net = &net;
  tape.version = net.version();
  const auto& layers = net.layers();
  tape.inputs.reserve(layers.size());
  tape.pre.reserve(layers.size());
  Matrix a = x;
  for (const auto& l : layers) {
    tape.inputs.push_back(a);
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    activate(l, z, a);
    tape.pre.push_back(std::move(z));
  }
  tape.output = std::move(a);
  return tape;
}

Matrix predict(const DenseNet& net, const Matrix& x) {
  check_input(net, x);
  Matrix a = x;
  for (const auto& l : net.layers()) {
    Matrix z = l.weight * a;
    z.colwise() += l.bias;
    activate(l, z, a);
  }
  return a;
}

Vector predict(const DenseNet& net, const Vector& x) {
  Matrix out = predict(net, Matrix(x));
  return out.col(0);
}

Gradients Gradients::zeros_like(const DenseNet& net) {
  Gradients g;
  for (const auto& l : net.layers()) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw ShapeError("gradient layouts differ");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  if (other.input.size() > 0) {
    if (input.size() == 0)
      input = other.input;
    else
      input += other.input;
  }
  return *this;
}

std::vector<double> Gradients::flat() const {
  std::vector<double> p;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    p.insert(p.end(), weight[i].data(), weight[i].data() + weight[i].size());
    p.insert(p.end(), bias[i].data(), bias[i].data() + bias[i].size());
  }
  return p;
}

Gradients backward(const DenseNet& net, const Tape& tape, const Matrix& grad_output, bool input_grad) {
  if (tape.net != &net || tape.version != net.version())
    throw TapeError("tape does not belong to the current network state");
  if (grad_output.rows() != tape.output.rows() || grad_output.cols() != tape.output.cols())
    throw ShapeError("upstream gradient shape does not match the network output");
  const auto& layers = net.layers();
  Gradients g;
  g.weight.resize(layers.size());
  g.bias.resize(layers.size());
  Matrix grad_a = grad_output;
  for (std::size_t i = layers.size(); i-- > 0;) {
    const Layer& l = layers[i];
    const Matrix& a_out = (i + 1 < layers.size()) ? tape.inputs[i + 1] : tape.output;
    Matrix grad_z = activation_grad(l, tape.pre[i], a_out, grad_a);
    g.weight[i].noalias() = grad_z * tape.inputs[i].transpose();
    g.bias[i] = grad_z.rowwise().sum();
    if (i > 0 || input_grad) grad_a.noalias() = l.weight.transpose() * grad_z;
  }
  if (input_grad) g.input = std::move(grad_a);
  return g;
}

namespace {

void adam_core(AdamState& s, std::span<double> p, std::span<const double> g, std::size_t offset) {
  const AdamConfig& c = s.config;
  const double t = static_cast<double>(s.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    double& m = s.m[offset + i];
    double& v = s.v[offset + i];
    m = c.beta1 * m + (1.0 - c.beta1) * g[i];
    v = c.beta2 * v + (1.0 - c.beta2) * g[i] * g[i];
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    p[i] -= c.lr * (m_hat / (std::sqrt(v_hat) + c.eps) + c.weight_decay * p[i]);
  }
}

void require_finite(std::span<const double> g) {
  for (double x : g)
    if (!std::isfinite(x)) throw OptimError("non-finite gradient passed to Adam");
}

}  // namespace

void adam_step(AdamState& state, DenseNet& net, const Gradients& grads) {
  if (state.m.size() != net.parameter_count() || grads.weight.size() != net.layers().size())
    throw ShapeError("Adam state does not match the network");
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    require_finite({grads.weight[i].data(), static_cast<std::size_t>(grads.weight[i].size())});
    require_finite({grads.bias[i].data(), static_cast<std::size_t>(grads.bias[i].size())});
  }
  ++state.step;
  std::size_t off = 0;
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    auto& l = net.layers()[i];
    if (grads.weight[i].rows() != l.weight.rows() || grads.weight[i].cols() != l.weight.cols())
      throw ShapeError("gradient shape does not match layer");
    adam_core(state, {l.weight.data(), static_cast<std::size_t>(l.weight.size())},
              {grads.weight[i].data(), static_cast<std::size_t>(grads.weight[i].size())}, off);
    off += static_cast<std::size_t>(l.weight.size());
    adam_core(state, {l.bias.data(), static_cast<std::size_t>(l.bias.size())},
              {grads.bias[i].data(), static_cast<std::size_t>(grads.bias[i].size())}, off);
    off += static_cast<std::size_t>(l.bias.size());
  }
  net.touch();
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw ShapeError("Adam state does not match the parameter vector");
  require_finite(grads);
  ++state.step;
  adam_core(state, params, grads, 0);
}

nlohmann::json to_json(const DenseNet& net) {
  nlohmann::json j;
  j["dims"] = net.dims();
  auto& acts = j["activations"] = nlohmann::json::array();
  auto& scales = j["scales"] = nlohmann::json::array();
  auto& layers = j["layers"] = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    acts.push_back(to_string(l.act));
    scales.push_back(l.scale);
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weight.size()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    layers.push_back({{"weight", w}, {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return j;
}

DenseNet dense_net_from_json(const nlohmann::json& j) {
  const auto dims = j.at("dims").get<std::vector<std::size_t>>();
  const auto& acts = j.at("activations");
  const auto& scales = j.at("scales");
  const auto& layers = j.at("layers");
  if (dims.size() != layers.size() + 1 || acts.size() != layers.size()) throw DataError("malformed network checkpoint");
  std::mt19937_64 rng(0);
  std::vector<Activation> a;
  for (const auto& s : acts) a.push_back(parse_activation(s.get<std::string>()));
  DenseNet net = DenseNet::create(dims, a, rng);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = net.layers()[i];
    const auto w = layers[i].at("weight").get<std::vector<double>>();
    const auto b = layers[i].at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(l.weight.size()) || b.size() != static_cast<std::size_t>(l.bias.size()))
      throw DataError("checkpoint layer has the wrong size");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = w[k++];
    for (std::size_t q = 0; q < b.size(); ++q) l.bias(static_cast<Eigen::Index>(q)) = b[q];
    l.scale = scales.at(i).get<double>();
  }
  return net;
}

nlohmann::json to_json(const AdamState& s) {
  return {{"lr", s.config.lr},     {"beta1", s.config.beta1}, {"beta2", s.config.beta2},
          {"eps", s.config.eps},   {"weight_decay", s.config.weight_decay},
          {"step", s.step},        {"m", s.m},
          {"v", s.v}};
}

AdamState adam_state_from_json(const nlohmann::json& j) {
  AdamState s;
  s.config = AdamConfig{j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
                        j.at("eps").get<double>(), j.at("weight_decay").get<double>()};
  s.step = j.at("step").get<std::uint64_t>();
  s.m = j.at("m").get<std::vector<double>>();
  s.v = j.at("v").get<std::vector<double>>();
  return s;
}

}  // namespace eqopt

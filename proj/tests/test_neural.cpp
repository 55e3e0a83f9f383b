#include <doctest.h>

#include <cmath>
#include <limits>

#include "eqopt/errors.hpp"
#include "eqopt/neural.hpp"
#include "helpers.hpp"

using namespace eqopt;
using eqopt::testing::numeric_gradient;
using eqopt::testing::random_matrix;
using eqopt::testing::relative_error;

namespace {

DenseNet single_linear(std::size_t in, std::size_t out) {
  std::mt19937_64 rng(1);
  return DenseNet::create({in, out}, {Activation::linear}, rng);
}

}  // namespace

TEST_SUITE("neural") {
  TEST_CASE("forward examples") {
    DenseNet net = single_linear(3, 2);
    net.layers()[0].weight.setZero();
    net.layers()[0].bias = Vector::LinSpaced(2, 0.5, 1.5);
    const Vector y = predict(net, Vector(Vector::Constant(3, 7.0)));
    CHECK(y(0) == 0.5);
    CHECK(y(1) == 1.5);

    DenseNet id = single_linear(4, 4);
    id.layers()[0].weight.setIdentity();
    id.layers()[0].bias.setZero();
    const Vector x = Vector::LinSpaced(4, -2.0, 3.0);
    CHECK((predict(id, x) - x).norm() == 0.0);

    id.layers()[0].act = Activation::relu;
    const Vector r = predict(id, x);
    CHECK(r(0) == 0.0);
    CHECK(r(3) == 3.0);

    CHECK_THROWS_AS(forward(id, Matrix::Zero(3, 2)), ShapeError);
  }

  TEST_CASE("backward matches central differences") {
    std::mt19937_64 rng(42);
    for (auto act : {Activation::relu, Activation::tanh_scaled, Activation::sigmoid, Activation::linear}) {
      DenseNet net = DenseNet::create({5, 7, 6, 3}, {Activation::tanh_scaled, act, Activation::sigmoid}, rng, 2.5);
      const Matrix x = random_matrix(5, 4, rng);
      const Matrix w = random_matrix(3, 4, rng);
      auto loss = [&] { return (predict(net, x).array() * w.array()).sum(); };
      const Tape tape = forward(net, x);
      const Gradients g = backward(net, tape, w, true);
      CHECK(relative_error(g.flat(), numeric_gradient(net, loss)) <= 1e-4);

      // Input gradient.
      std::vector<double> xin(x.data(), x.data() + x.size());
      auto loss_x = [&] {
        const Matrix xm = Eigen::Map<const Matrix>(xin.data(), 5, 4);
        return (predict(net, xm).array() * w.array()).sum();
      };
      const auto num = numeric_gradient(xin, loss_x);
      std::vector<double> ana(g.input.data(), g.input.data() + g.input.size());
      CHECK(relative_error(ana, num) <= 1e-4);
    }
  }

  TEST_CASE("zero upstream gradient and stale tapes") {
    std::mt19937_64 rng(3);
    DenseNet net = DenseNet::create({4, 5, 2}, {Activation::relu, Activation::linear}, rng);
    const Tape tape = forward(net, random_matrix(4, 3, rng));
    for (double v : backward(net, tape, Matrix::Zero(2, 3)).flat()) CHECK(v == 0.0);
    net.touch();
    CHECK_THROWS_AS(backward(net, tape, Matrix::Zero(2, 3)), TapeError);
  }

  TEST_CASE("flat parameters round trip and json") {
    std::mt19937_64 rng(9);
    DenseNet net = DenseNet::create({3, 4, 2}, {Activation::relu, Activation::sigmoid}, rng);
    auto p = net.flat_parameters();
    CHECK(p.size() == net.parameter_count());
    p[5] += 1.0;
    net.set_flat_parameters(p);
    CHECK(net.flat_parameters() == p);
    const DenseNet back = dense_net_from_json(to_json(net));
    CHECK(back.flat_parameters() == p);
    CHECK(back.dims() == net.dims());
  }

  TEST_CASE("adam examples") {
    AdamState s(AdamConfig{}, 1);
    std::vector<double> p{0.0};
    adam_step(s, p, std::vector<double>{1.0});
    CHECK(p[0] == doctest::Approx(-1e-3 / (1.0 + 1e-8)).epsilon(1e-12));

    AdamState z(AdamConfig{}, 2);
    std::vector<double> q{0.3, -0.7};
    adam_step(z, q, std::vector<double>{0.0, 0.0});
    CHECK(q[0] == 0.3);
    CHECK(q[1] == -0.7);

    AdamConfig wd;
    wd.weight_decay = 0.1;
    AdamState d(wd, 1);
    std::vector<double> r{2.0};
    adam_step(d, r, std::vector<double>{0.0});
    CHECK(r[0] == doctest::Approx(2.0 * (1.0 - 1e-3 * 0.1)).epsilon(1e-14));

    AdamState n(AdamConfig{}, 1);
    std::vector<double> keep{1.0};
    CHECK_THROWS_AS(adam_step(n, keep, std::vector<double>{std::numeric_limits<double>::quiet_NaN()}), OptimError);
    CHECK(keep[0] == 1.0);
  }

  TEST_CASE("soft update") {
    std::mt19937_64 rng(4);
    DenseNet a = DenseNet::create({2, 2}, {Activation::linear}, rng);
    DenseNet b = DenseNet::create({2, 2}, {Activation::linear}, rng);
    const auto pa = a.flat_parameters(), pb = b.flat_parameters();
    a.soft_update_from(b, 0.25);
    const auto pc = a.flat_parameters();
    for (std::size_t i = 0; i < pc.size(); ++i) CHECK(pc[i] == doctest::Approx(0.25 * pb[i] + 0.75 * pa[i]));
  }
}

#include <doctest.h>

#include <random>

#include "eqopt/errors.hpp"
#include "eqopt/latent.hpp"
#include "helpers.hpp"

using namespace eqopt;
using eqopt::testing::numeric_gradient;
using eqopt::testing::random_matrix;
using eqopt::testing::relative_error;

namespace {

AutoencoderBundle small_ae(std::uint64_t seed) {
  AeConfig cfg;
  cfg.latent_dim = 3;
  cfg.hidden = {8};
  std::mt19937_64 rng(seed);
  return make_autoencoder(20, 400.0, cfg, rng);
}

std::size_t brute_medoid(const std::vector<Vector>& pts) {
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double sum = 0.0;
    for (const auto& q : pts) sum += (pts[i] - q).norm();
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("latent") {
  TEST_CASE("autoencoder loss gradients match central differences") {
    for (bool classify_invalid : {false, true}) {
      AutoencoderBundle ae = small_ae(11);
      std::mt19937_64 rng(12);
      const Matrix x = random_matrix(20, 12, rng, -450.0, 450.0);
      std::vector<int> y(12);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 3 == 0 ? 0 : 1;
      const AeBatchLoss l = autoencoder_loss(ae, x, y, classify_invalid);
      auto total = [&] { return autoencoder_loss(ae, x, y, classify_invalid, false).total(); };
      CHECK(relative_error(l.encoder.flat(), numeric_gradient(ae.encoder, total)) <= 1e-4);
      CHECK(relative_error(l.decoder.flat(), numeric_gradient(ae.decoder, total)) <= 1e-4);
      CHECK(relative_error(l.classifier.flat(), numeric_gradient(ae.classifier, total)) <= 1e-4);
    }
  }

  TEST_CASE("invalid samples give no classifier gradient by default") {
    AutoencoderBundle ae = small_ae(2);
    std::mt19937_64 rng(3);
    const Matrix x = random_matrix(20, 5, rng, -300.0, 300.0);
    const std::vector<int> y(5, 0);
    const AeBatchLoss l = autoencoder_loss(ae, x, y, false);
    CHECK(l.classification == 0.0);
    for (double g : l.classifier.flat()) CHECK(g == 0.0);
  }

  TEST_CASE("perfect reconstruction and confident classification give zero loss") {
    AutoencoderBundle ae = small_ae(5);
    for (auto& layer : ae.decoder.layers()) {
      layer.weight.setZero();
      layer.bias.setZero();
    }
    ae.classifier.layers()[0].weight.setZero();
    ae.classifier.layers()[0].bias.setConstant(1e3);
    const std::vector<int> y{1, 1};
    const AeBatchLoss l = autoencoder_loss(ae, Matrix::Zero(20, 2), y, false);
    CHECK(l.reconstruction == 0.0);
    CHECK(l.total() <= 2e-7);
  }

  TEST_CASE("input conditioning clips") {
    const AutoencoderBundle ae = small_ae(1);
    Matrix x(1, 3);
    x << 1000.0, -250.0, -900.0;
    const Matrix c = condition_input(ae, x);
    CHECK(c(0, 0) == 1.0);
    CHECK(c(0, 1) == -0.5);
    CHECK(c(0, 2) == -1.0);
  }

  TEST_CASE("encode") {
    AutoencoderBundle ae = small_ae(7);
    Segment s{std::vector<double>(20, 120.0), 0, 10.0, 156.3};
    CHECK((encode(ae, s) - encode(ae, s)).norm() == 0.0);
    for (auto& layer : ae.encoder.layers()) layer.weight.setZero();
    ae.encoder.layers().back().bias = Vector::LinSpaced(3, 1.0, 3.0);
    CHECK((encode(ae, s) - ae.encoder.layers().back().bias).norm() == 0.0);
    Segment wrong{std::vector<double>(19, 0.0), 0, 10.0, 156.3};
    CHECK_THROWS_AS(encode(ae, wrong), ShapeError);
  }

  TEST_CASE("anchor examples") {
    std::vector<Vector> one{Vector::Constant(4, 2.0)};
    CHECK((compute_anchor(one).c - one[0]).norm() == 0.0);
    std::vector<Vector> line;
    for (double v : {0.0, 1.0, 10.0}) line.push_back(Vector::Constant(1, v));
    const AnchorPoint a = compute_anchor(line);
    CHECK(a.c(0) == 1.0);
    CHECK(a.source_index == 1);
    CHECK_THROWS_AS(compute_anchor(std::vector<Vector>{}), DataError);
  }

  TEST_CASE("anchor matches the brute-force medoid") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> m(2, 200);
    for (int t = 0; t < 50; ++t) {
      std::vector<Vector> pts(m(rng), Vector(11));
      for (auto& p : pts)
        for (Eigen::Index i = 0; i < 11; ++i) p(i) = n(rng);
      const std::size_t want = brute_medoid(pts);
      const AnchorPoint got = compute_anchor(pts);
      REQUIRE(got.source_index == want);
      REQUIRE((got.c - pts[want]).norm() == 0.0);
    }
  }

  TEST_CASE("latent_si is non-positive and zero at the anchor") {
    const AutoencoderBundle ae = small_ae(8);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-400.0, 400.0);
    Segment s{std::vector<double>(20), 0, 10.0, 156.3};
    for (auto& v : s.data) v = u(rng);
    const AnchorPoint at{encode(ae, s), 0};
    CHECK(latent_si(ae, at, s) == 0.0);
    const AnchorPoint off{Vector::Constant(3, 5.0), 0};
    for (int k = 0; k < 20; ++k) {
      for (auto& v : s.data) v = u(rng);
      CHECK(latent_si(ae, off, s) <= 0.0);
    }
  }

  TEST_CASE("training rejects single-class data") {
    std::vector<LabeledSegment> data(10);
    for (auto& d : data) {
      d.output = Segment{std::vector<double>(20, 100.0), 0, 10.0, 156.3};
      d.input = d.output;
      d.label.y = 1;
    }
    AeConfig cfg;
    cfg.hidden = {8};
    cfg.latent_dim = 3;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train_autoencoder(data, 400.0, cfg), DataError);
  }

  TEST_CASE("json round trip") {
    const AutoencoderBundle ae = small_ae(4);
    const AutoencoderBundle back = autoencoder_from_json(to_json(ae));
    CHECK(back.encoder.flat_parameters() == ae.encoder.flat_parameters());
    CHECK(back.input_scale == ae.input_scale);
    const AnchorPoint a{Vector::LinSpaced(3, 0.1, 0.3), 7};
    const AnchorPoint b = anchor_from_json(to_json(a));
    CHECK((b.c - a.c).norm() == 0.0);
    CHECK(b.source_index == 7);
  }
}

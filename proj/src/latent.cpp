#include "eqopt/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eqopt/errors.hpp"

namespace eqopt {

AutoencoderBundle make_autoencoder(std::size_t n_x, double swing, const AeConfig& cfg, std::mt19937_64& rng) {
  if (n_x == 0 || cfg.latent_dim == 0) throw ConfigError("autoencoder needs positive n_x and latent dimension");
  AutoencoderBundle ae;
  ae.input_scale = 1.25 * swing;

  std::vector<std::size_t> enc_dims{n_x};
  enc_dims.insert(enc_dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  enc_dims.push_back(cfg.latent_dim);
  std::vector<Activation> enc_acts(enc_dims.size() - 1, Activation::relu);
  enc_acts.back() = Activation::linear;

  std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
  std::vector<Activation> dec_acts(dec_dims.size() - 1, Activation::relu);
  dec_acts.back() = Activation::tanh_scaled;

  ae.encoder = DenseNet::create(enc_dims, enc_acts, rng);
  ae.decoder = DenseNet::create(dec_dims, dec_acts, rng, ae.input_scale);
  ae.classifier = DenseNet::create({cfg.latent_dim, 1}, {Activation::sigmoid}, rng);
  return ae;
}

Matrix condition_input(const AutoencoderBundle& ae, const Matrix& x) {
  return (x / ae.input_scale).cwiseMax(-1.0).cwiseMin(1.0);
}

AeBatchLoss autoencoder_loss(const AutoencoderBundle& ae, const Matrix& x, std::span<const int> labels,
                             bool classify_invalid, bool with_grads) {
  const auto batch = static_cast<std::size_t>(x.cols());
  if (batch == 0 || labels.size() != batch) throw ShapeError("labels must match the batch size");
  const double inv_b = 1.0 / static_cast<double>(batch);
  const double inv_k2n = 1.0 / (ae.input_scale * ae.input_scale * static_cast<double>(x.rows()));

  const Matrix xc = condition_input(ae, x);
  const Tape enc = forward(ae.encoder, xc);
  const Tape dec = forward(ae.decoder, enc.output);
  const Tape cls = forward(ae.classifier, enc.output);

  AeBatchLoss out;
  const Matrix diff = xc * ae.input_scale - dec.output;
  out.reconstruction = diff.squaredNorm() * inv_k2n * inv_b;

  Matrix grad_prob(1, static_cast<Eigen::Index>(batch));
  for (std::size_t i = 0; i < batch; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double p = cls.output(0, col);
    const double pc = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
    const bool inside = p > kProbFloor && p < 1.0 - kProbFloor;
    const double y = labels[i] == 1 ? 1.0 : 0.0;
    double g = 0.0;
    out.classification -= y * std::log(pc) * inv_b;
    if (inside) g -= y / pc * inv_b;
    if (classify_invalid) {
      out.classification -= (1.0 - y) * std::log(1.0 - pc) * inv_b;
      if (inside) g += (1.0 - y) / (1.0 - pc) * inv_b;
    }
    grad_prob(0, col) = g;
  }
  if (!std::isfinite(out.total())) throw OptimError("autoencoder loss is not finite");
  if (!with_grads) return out;

  out.decoder = backward(ae.decoder, dec, -2.0 * inv_k2n * inv_b * diff, true);
  out.classifier = backward(ae.classifier, cls, grad_prob, true);
  const Matrix grad_latent = out.decoder.input + out.classifier.input;
  out.encoder = backward(ae.encoder, enc, grad_latent, false);
  return out;
}

Matrix segments_matrix(std::span<const Segment* const> segs) {
  if (segs.empty()) return Matrix();
  const auto n = static_cast<Eigen::Index>(segs.front()->size());
  Matrix x(n, static_cast<Eigen::Index>(segs.size()));
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (static_cast<Eigen::Index>(segs[i]->size()) != n) throw ShapeError("segments differ in length");
    x.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(segs[i]->data.data(), n);
  }
  return x;
}

AeTrainResult train_autoencoder(std::span<const LabeledSegment> data, double swing, const AeConfig& cfg) {
  if (data.empty()) throw DataError("autoencoder training set is empty");
  const std::size_t n_valid = static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](const LabeledSegment& s) { return s.label.valid(); }));
  if (n_valid == 0 || n_valid == data.size())
    throw DataError("autoencoder training needs both valid and invalid segments");
  if (cfg.batch == 0) throw ConfigError("batch size must be positive");

  std::mt19937_64 rng(cfg.seed);
  AeTrainResult result;
  result.bundle = make_autoencoder(data.front().output.size(), swing, cfg, rng);
  auto& ae = result.bundle;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.val_fraction * static_cast<double>(data.size())));
  result.val_index.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_index.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(result.val_index.begin(), result.val_index.end());
  std::sort(result.train_index.begin(), result.train_index.end());

  std::vector<const Segment*> all;
  all.reserve(data.size());
  for (const auto& item : data) all.push_back(&item.output);
  const Matrix x_all = segments_matrix(all);

  auto gather = [&](std::span<const std::size_t> idx, Matrix& x, std::vector<int>& y) {
    x.resize(x_all.rows(), static_cast<Eigen::Index>(idx.size()));
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.col(static_cast<Eigen::Index>(i)) = x_all.col(static_cast<Eigen::Index>(idx[i]));
      y[i] = data[idx[i]].label.y;
    }
  };

  const AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
  AdamState s_enc(adam, ae.encoder.parameter_count());
  AdamState s_dec(adam, ae.decoder.parameter_count());
  AdamState s_cls(adam, ae.classifier.parameter_count());

  std::vector<std::size_t> train = result.train_index;
  Matrix xb;
  std::vector<int> yb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    AeEpoch e{0.0, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < train.size(); start += cfg.batch) {
      const std::size_t len = std::min(cfg.batch, train.size() - start);
      gather(std::span(train).subspan(start, len), xb, yb);
      AeBatchLoss loss = autoencoder_loss(ae, xb, yb, cfg.classify_invalid);
      adam_step(s_enc, ae.encoder, loss.encoder);
      adam_step(s_dec, ae.decoder, loss.decoder);
      adam_step(s_cls, ae.classifier, loss.classifier);
      const double w = static_cast<double>(len) / static_cast<double>(train.size());
      e.reconstruction += w * loss.reconstruction;
      e.classification += w * loss.classification;
    }
    e.total = e.reconstruction + e.classification;
    if (!result.val_index.empty()) {
      gather(result.val_index, xb, yb);
      e.val_total = autoencoder_loss(ae, xb, yb, cfg.classify_invalid, false).total();
    }
    result.trace.push_back(e);
  }
  return result;
}

Matrix encode_batch(const AutoencoderBundle& ae, const Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != ae.n_x())
    throw ShapeError("segment length " + std::to_string(x.rows()) + " does not match encoder input " +
                     std::to_string(ae.n_x()));
  return predict(ae.encoder, condition_input(ae, x));
}

Vector encode(const AutoencoderBundle& ae, const Segment& s) {
  if (s.size() != ae.n_x())
    throw ShapeError("segment length " + std::to_string(s.size()) + " does not match encoder input " +
                     std::to_string(ae.n_x()));
  const Matrix x = Eigen::Map<const Vector>(s.data.data(), static_cast<Eigen::Index>(s.size()));
  return predict(ae.encoder, condition_input(ae, x)).col(0);
}

AnchorPoint compute_anchor(std::span<const Vector> latents, std::size_t exact_limit, std::uint64_t seed) {
  if (latents.empty()) throw DataError("anchor needs at least one valid latent");
  std::vector<std::size_t> members(latents.size());
  std::iota(members.begin(), members.end(), 0);
  if (exact_limit > 0 && members.size() > exact_limit) {
    std::mt19937_64 rng(seed);
    std::shuffle(members.begin(), members.end(), rng);
    members.resize(exact_limit);
    std::sort(members.begin(), members.end());
  }
  const std::size_t m = members.size();
  std::vector<double> sums(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      sums[i] += (latents[members[i]] - latents[members[j]]).norm();
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i)
    if (sums[i] < sums[best]) best = i;
  return AnchorPoint{latents[members[best]], members[best]};
}

double latent_score(const AnchorPoint& anchor, const Vector& z) {
  if (z.size() != anchor.c.size()) throw ShapeError("latent dimension does not match the anchor");
  return -(anchor.c - z).norm();
}

double latent_si(const AutoencoderBundle& ae, const AnchorPoint& anchor, const Segment& s) {
  return latent_score(anchor, encode(ae, s));
}

nlohmann::json to_json(const AutoencoderBundle& ae) {
  return {{"input_scale", ae.input_scale},
          {"encoder", to_json(ae.encoder)},
          {"decoder", to_json(ae.decoder)},
          {"classifier", to_json(ae.classifier)}};
}

AutoencoderBundle autoencoder_from_json(const nlohmann::json& j) {
  AutoencoderBundle ae;
  ae.input_scale = j.at("input_scale").get<double>();
  ae.encoder = dense_net_from_json(j.at("encoder"));
  ae.decoder = dense_net_from_json(j.at("decoder"));
  ae.classifier = dense_net_from_json(j.at("classifier"));
  if (ae.decoder.input_dim() != ae.latent_dim() || ae.classifier.input_dim() != ae.latent_dim() ||
      ae.decoder.output_dim() != ae.n_x())
    throw DataError("autoencoder checkpoint dimensions do not chain");
  return ae;
}

nlohmann::json to_json(const AnchorPoint& a) {
  return {{"c", std::vector<double>(a.c.data(), a.c.data() + a.c.size())}, {"source_index", a.source_index}};
}

AnchorPoint anchor_from_json(const nlohmann::json& j) {
  const auto c = j.at("c").get<std::vector<double>>();
  AnchorPoint a;
  a.c = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
  a.source_index = j.at("source_index").get<std::size_t>();
  return a;
}

}  // namespace eqopt

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eqopt/channel.hpp"
#include "eqopt/neural.hpp"

namespace eqopt {

struct AeConfig {
  std::size_t latent_dim = 11;
  std::vector<std::size_t> hidden{256, 64};  // encoder widths; the decoder mirrors them
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t batch = 256;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;
  double val_fraction = 0.1;
  /// Also penalize -log(1 - y_hat) on invalid samples. Off: only valid
  /// samples receive classification gradients.
  bool classify_invalid = false;
};

/// Encoder l(.), decoder g(.), classifier c(.). Voltages enter the encoder
/// divided by `input_scale` (1.25 x swing) and clipped to [-1, 1]; the
/// decoder's scaled-tanh output is in mV over the same range.
struct AutoencoderBundle {
  DenseNet encoder;
  DenseNet decoder;
  DenseNet classifier;
  double input_scale = 500.0;

  std::size_t n_x() const { return encoder.input_dim(); }
  std::size_t latent_dim() const { return encoder.output_dim(); }
};

AutoencoderBundle make_autoencoder(std::size_t n_x, double swing, const AeConfig& cfg, std::mt19937_64& rng);

/// Classifier outputs are clamped to [kProbFloor, 1 - kProbFloor] before log.
inline constexpr double kProbFloor = 1e-7;

/// Scaled and clipped encoder input for columns of `x` (mV).
Matrix condition_input(const AutoencoderBundle& ae, const Matrix& x);

struct AeBatchLoss {
  double reconstruction = 0.0;  // batch mean of ||(x_c - x_hat) / scale||^2 / n_x, x_c the clipped input
  double classification = 0.0;  // mean of -y log(y_hat) (plus the invalid term if enabled)
  double total() const { return reconstruction + classification; }
  Gradients encoder, decoder, classifier;
};

/// Combined loss on a batch: columns of `x` are segments in mV, labels in {0, 1}.
AeBatchLoss autoencoder_loss(const AutoencoderBundle& ae, const Matrix& x, std::span<const int> labels,
                             bool classify_invalid, bool with_grads = true);

struct AeEpoch {
  double reconstruction;
  double classification;
  double total;
  double val_total;
};

struct AeTrainResult {
  AutoencoderBundle bundle;
  std::vector<AeEpoch> trace;
  std::vector<std::size_t> train_index;  // dataset indices used for training
  std::vector<std::size_t> val_index;    // held-out indices
};

/// Throws DataError if the data holds a single class.
AeTrainResult train_autoencoder(std::span<const LabeledSegment> data, double swing, const AeConfig& cfg);

/// Stacks segment data as columns.
Matrix segments_matrix(std::span<const Segment* const> segs);

Vector encode(const AutoencoderBundle& ae, const Segment& s);
/// Encodes each column (mV) of `x`.
Matrix encode_batch(const AutoencoderBundle& ae, const Matrix& x);

struct AnchorPoint {
  Vector c;
  std::size_t source_index = 0;
};

/// Medoid of `latents` (the member minimizing summed Euclidean distance,
/// lowest index on ties). Above `exact_limit` points a seeded subsample of
/// that size is searched instead.
AnchorPoint compute_anchor(std::span<const Vector> latents, std::size_t exact_limit = 2000,
                           std::uint64_t seed = 1);

/// -||c - l(s)||, at most 0.
double latent_si(const AutoencoderBundle& ae, const AnchorPoint& anchor, const Segment& s);
double latent_score(const AnchorPoint& anchor, const Vector& z);

nlohmann::json to_json(const AutoencoderBundle& ae);
AutoencoderBundle autoencoder_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnchorPoint& a);
AnchorPoint anchor_from_json(const nlohmann::json& j);

}  // namespace eqopt

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqopt/a2c.hpp"
#include "eqopt/baselines.hpp"
#include "eqopt/channel.hpp"
#include "eqopt/equalizer.hpp"
#include "eqopt/latent.hpp"

namespace eqopt {

inline constexpr const char* kVersion = "0.1.0";

struct DataConfig {
  std::size_t n_x = 10000;
  std::size_t n_segments = 2000;
  std::size_t stride = 25;
  double test_fraction = 0.2;
};

struct EvalConfig {
  std::size_t segments = 200;        // evaluation segments drawn from the test split
  std::size_t tuning_segments = 4;   // segments a single-vector search optimizes on
  std::optional<std::size_t> grid_levels;  // default: 5 for d = 4, 3 for d = 8
};

struct CompareSiConfig {
  std::size_t trials = 10;
};

struct GeneralizeConfig {
  std::size_t units = 8;
  std::size_t heldout = 2;
  double perturbation = 0.15;  // relative spread applied to each ISI tap
  std::size_t segments_per_unit = 300;
  std::size_t eval_segments_per_unit = 25;
  /// Optional explicit per-unit channel sections; overrides perturbation.
  std::vector<nlohmann::json> unit_channels;
};

struct RunConfig {
  std::uint64_t seed = 1;
  ChannelConfig channel;
  DataConfig data;
  EyeMask mask;
  EqualizerKind equalizer = EqualizerKind::dfe;
  AeConfig autoencoder;
  std::size_t anchor_exact_limit = 2000;
  A2CConfig a2c;
  EvalConfig eval;
  GAConfig ga;
  SwarmConfig pso;
  QLearningConfig qlearning;
  DDPGConfig ddpg;
  CompareSiConfig compare_si;
  GeneralizeConfig generalize;
  std::string output_dir = "out";
};

/// Full default document (every key present).
nlohmann::json default_config_json();
/// Desk-scale preset overrides: n_x 1000, 2000 segments, 40 autoencoder and 60 A2C epochs.
nlohmann::json desk_preset_json();

/// Applies "a.b.c=value" overrides; the value is parsed as JSON when it
/// parses, otherwise taken as a string. Throws ConfigError on unknown paths.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// merge_patch that keeps explicit nulls on nullable keys.
void merge_config(nlohmann::json& doc, const nlohmann::json& patch);

/// Defaults, then `patch` merged on top. Unknown keys and invalid values
/// throw ConfigError.
RunConfig parse_config(const nlohmann::json& patch);
nlohmann::json to_json(const RunConfig& cfg);

/// Every section validated against its module's preconditions.
void validate(const RunConfig& cfg);

ChannelConfig channel_from_json(const nlohmann::json& j, const ChannelConfig& base);
nlohmann::json to_json(const ChannelConfig& c);

/// Deterministic per-stage seed.
std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage);

/// FNV-1a 64 over the canonical (key-sorted, compact) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

}  // namespace eqopt

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqopt/a2c.hpp"
#include "eqopt/baselines.hpp"
#include "eqopt/config.hpp"
#include "eqopt/eye.hpp"
#include "eqopt/latent.hpp"

namespace eqopt {

// ---- data plumbing ----

/// Contiguous split: the last test_fraction of segments form the test set.
/// Training segments that overlap the first test segment are dropped.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

Split split_dataset(std::size_t n, const DataConfig& data);

/// `count` indices spread evenly over `idx` (all of them if fewer).
std::vector<std::size_t> spaced_subset(const std::vector<std::size_t>& idx, std::size_t count);

std::vector<const Segment*> output_pointers(const Dataset& ds, const std::vector<std::size_t>& idx);

/// Equalizes `s` with the physical parameters that action `a` maps to.
Segment equalize(const Segment& s, EqualizerKind kind, std::span<const double> action);

// ---- training stages ----

AeTrainResult train_ae_stage(const std::vector<const LabeledSegment*>& train, double swing, const RunConfig& cfg);
/// Medoid of the latents of valid training segments. Throws DataError if none is valid.
AnchorPoint anchor_stage(const AutoencoderBundle& ae, const std::vector<const LabeledSegment*>& train,
                         const RunConfig& cfg);

struct A2CStage {
  A2CAgent agent;
  A2CTrainResult result;
};

A2CStage train_a2c_stage(const AutoencoderBundle& ae, const AnchorPoint& anchor,
                         const std::vector<const Segment*>& train, EqualizerKind kind, const RunConfig& cfg);

// ---- evaluation ----

struct SegmentOutcome {
  std::size_t index = 0;   // dataset index
  std::size_t origin = 0;  // sample offset in the source waveform
  std::vector<double> action;
  std::vector<double> physical;
  double area_before = 0.0;
  double area_after = 0.0;
  std::optional<double> improvement;  // undefined when the raw eye is closed
  double si_before = 0.0;             // latent SI of the raw and equalized segment
  double si_after = 0.0;
};

struct MethodReport {
  std::string method;
  EqualizerKind kind = EqualizerKind::dfe;
  std::vector<SegmentOutcome> segments;
  std::size_t training_evaluations = 0;
  std::size_t inference_evaluations = 0;
  double mean_improvement = 0.0;   // over segments with a defined improvement
  double fraction_improved = 0.0;  // area_after > area_before
  std::size_t undefined = 0;
  std::optional<double> wall_seconds;

  std::size_t total_evaluations() const { return training_evaluations + inference_evaluations; }
};

SegmentOutcome evaluate_action(const Dataset& ds, std::size_t index, EqualizerKind kind,
                               std::span<const double> action, const AutoencoderBundle& ae,
                               const AnchorPoint& anchor);

/// Fills the summary fields from `segments`.
void summarize(MethodReport& r);

nlohmann::json to_json(const MethodReport& r);
void write_report_csv(const std::string& path, const MethodReport& r);

/// Mean policy action per segment.
MethodReport evaluate_a2c(const A2CAgent& agent, std::size_t training_evaluations, const AutoencoderBundle& ae,
                          const AnchorPoint& anchor, const Dataset& ds, const std::vector<std::size_t>& idx,
                          EqualizerKind kind);

enum class SearchObjective { latent, eye };
std::string to_string(SearchObjective o);
SearchObjective parse_search_objective(const std::string& s);

/// Per-segment objective: latent SI, or eye area of the equalized segment.
Objective segment_objective(const Segment& s, EqualizerKind kind, SearchObjective objective,
                            const AutoencoderBundle& ae, const AnchorPoint& anchor, const EyeGeometry& geom);

/// Grid, GA or PSO run separately on every segment in `idx`.
MethodReport evaluate_search(const std::string& method, const RunConfig& cfg, const AutoencoderBundle& ae,
                             const AnchorPoint& anchor, const Dataset& ds, const std::vector<std::size_t>& idx,
                             EqualizerKind kind, SearchObjective objective, double budget);

/// Branching Q-learning on the ideal-input matching reward over `train`,
/// greedy actions on `idx`.
MethodReport evaluate_qlearning(const RunConfig& cfg, const AutoencoderBundle& ae, const AnchorPoint& anchor,
                                const Dataset& ds, const std::vector<std::size_t>& train,
                                const std::vector<std::size_t>& idx, EqualizerKind kind, double budget);

/// Sequential DDPG on BER over `train` (one segment per episode), its final
/// vector applied to every segment in `idx`.
MethodReport evaluate_ddpg(const RunConfig& cfg, const AutoencoderBundle& ae, const AnchorPoint& anchor,
                           const Dataset& ds, const std::vector<std::size_t>& train,
                           const std::vector<std::size_t>& idx, EqualizerKind kind, double budget);

// ---- experiments ----

struct SiMethodSummary {
  SearchObjective objective = SearchObjective::latent;
  std::vector<double> improvements;  // per trial, on the evaluation segments
  double mean = 0.0;
  double std = 0.0;                  // population standard deviation over trials
  std::size_t evaluations = 0;       // objective calls, summed over trials
  double objective_seconds = 0.0;    // time inside the objective, summed
  double per_evaluation_seconds() const { return evaluations ? objective_seconds / evaluations : 0.0; }
};

struct CompareSiReport {
  EqualizerKind kind = EqualizerKind::dfe;
  std::vector<std::size_t> tuning;
  std::vector<std::size_t> eval;
  SiMethodSummary latent;
  SiMethodSummary eye;
};

/// PSO on the mean SI over the tuning segments, once per trial for each SI.
CompareSiReport run_compare_si(const RunConfig& cfg, const Dataset& ds, const Split& split,
                               const AutoencoderBundle& ae, const AnchorPoint& anchor);
nlohmann::json to_json(const CompareSiReport& r, bool record_timing);

struct GeneralizeCell {
  std::string set;  // "training_units" or "heldout_units"
  EqualizerKind kind = EqualizerKind::dfe;
  double mean_improvement = 0.0;
  std::size_t segments = 0;
  std::size_t undefined = 0;
};

struct GeneralizeReport {
  std::vector<ChannelConfig> units;
  std::size_t training_units = 0;
  std::vector<GeneralizeCell> cells;
  double seconds = 0.0;

  const GeneralizeCell& cell(const std::string& set, EqualizerKind kind) const;
  /// training minus held-out improvement.
  double gap(EqualizerKind kind) const;
};

/// Channel of unit u: explicit section if configured, otherwise the base
/// channel with every ISI tap scaled by 1 + perturbation * U[-1, 1].
ChannelConfig unit_channel(const RunConfig& cfg, std::size_t u);

/// Trains on the first units - heldout units, evaluates on the test split of
/// every unit.
GeneralizeReport run_generalize(const RunConfig& cfg, const std::vector<EqualizerKind>& kinds);
nlohmann::json to_json(const GeneralizeReport& r, bool record_timing);

// ---- commands (file in, file out) ----

/// Merges `patch` over the manifest's config. Throws ConfigError if the
/// patch changes the seed, channel, data or mask sections.
RunConfig resolve_config(const nlohmann::json& manifest_config, const nlohmann::json& patch);

std::string cmd_gen_data(const RunConfig& cfg, const std::string& out_dir);
std::string cmd_train_ae(const std::string& manifest, const nlohmann::json& patch, const std::string& out_dir);
std::string cmd_anchor(const std::string& manifest, const std::string& ae_path, const nlohmann::json& patch,
                       const std::string& out_dir);
std::string cmd_train_a2c(const std::string& manifest, const std::string& ae_path, const std::string& anchor_path,
                          const nlohmann::json& patch, const std::string& out_dir);
std::string cmd_optimize(const std::string& manifest, const std::string& ae_path, const std::string& agent_path,
                         const nlohmann::json& patch, const std::string& out_dir);
std::string cmd_evaluate(const std::string& manifest, const std::string& ae_path, const std::string& anchor_path,
                         const std::string& optimized_path, const nlohmann::json& patch, const std::string& out_dir,
                         bool record_timing);
/// All stages, resuming from artifacts in out_dir whose config hash matches,
/// plus a grid-search comparison. Returns the summary path.
std::string cmd_pipeline(const RunConfig& cfg, const std::string& out_dir, bool record_timing);
std::string cmd_compare_si(const std::string& manifest, const std::string& ae_path, const std::string& anchor_path,
                           const nlohmann::json& patch, const std::string& out_dir, bool record_timing);
std::string cmd_generalize(const RunConfig& cfg, const std::string& out_dir, bool record_timing);
std::string cmd_baseline(const std::string& method, const std::string& manifest, const std::string& ae_path,
                         const std::string& anchor_path, SearchObjective objective, double budget,
                         const nlohmann::json& patch, const std::string& out_dir, bool record_timing);
/// Eye CSV and SVG of one segment, raw and (with `optimized_path`) equalized.
std::string cmd_export_eye(const std::string& manifest, std::size_t index, const std::string& optimized_path,
                           const std::string& out_dir);
std::string cmd_export_latents(const std::string& manifest, const std::string& ae_path, const std::string& out_dir);

}  // namespace eqopt

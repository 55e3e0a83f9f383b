#include "eqopt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "eqopt/errors.hpp"
#include "eqopt/io.hpp"

namespace eqopt {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double pow_count(std::size_t base, std::size_t exp) { return std::pow(static_cast<double>(base), static_cast<double>(exp)); }

std::vector<const LabeledSegment*> item_pointers(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<const LabeledSegment*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&ds.items.at(i));
  return out;
}

EyeGeometry geometry_for(const Dataset& ds) { return EyeGeometry::for_swing(ds.swing); }

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string kind_suffix(EqualizerKind kind) { return kind == EqualizerKind::dfe ? "dfe" : "ctle_dfe"; }

}  // namespace

// ---- data plumbing ----

Split split_dataset(std::size_t n, const DataConfig& data) {
  if (n < 2) throw DataError("need at least two segments to split");
  auto n_test = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * data.test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  const std::size_t first_test = n - n_test;
  // segment k spans [k stride, k stride + n_x); drop training segments that reach into the first test segment
  const std::size_t overlap = data.stride ? (data.n_x + data.stride - 1) / data.stride - 1 : 0;
  const std::size_t n_train = first_test > overlap ? first_test - overlap : 0;
  if (n_train == 0) throw DataError("no training segments remain after removing overlap with the test split");
  Split s;
  s.train.resize(n_train);
  std::iota(s.train.begin(), s.train.end(), 0);
  s.test.resize(n_test);
  std::iota(s.test.begin(), s.test.end(), first_test);
  return s;
}

std::vector<std::size_t> spaced_subset(const std::vector<std::size_t>& idx, std::size_t count) {
  if (count >= idx.size()) return idx;
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(idx[k * idx.size() / count]);
  return out;
}

std::vector<const Segment*> output_pointers(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<const Segment*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&ds.items.at(i).output);
  return out;
}

Segment equalize(const Segment& s, EqualizerKind kind, std::span<const double> action) {
  const MappedParams p = map_action(action, ParamRanges::for_kind(kind));
  return apply_chain(s, setting_from_physical(kind, p.physical));
}

// ---- training stages ----

AeTrainResult train_ae_stage(const std::vector<const LabeledSegment*>& train, double swing, const RunConfig& cfg) {
  std::vector<LabeledSegment> data;
  data.reserve(train.size());
  for (const auto* p : train) data.push_back(*p);
  return train_autoencoder(data, swing, cfg.autoencoder);
}

AnchorPoint anchor_stage(const AutoencoderBundle& ae, const std::vector<const LabeledSegment*>& train,
                         const RunConfig& cfg) {
  std::vector<const Segment*> valid;
  for (const auto* p : train)
    if (p->label.valid()) valid.push_back(&p->output);
  if (valid.empty()) throw DataError("no valid training segment to place the anchor on");
  const Matrix z = encode_batch(ae, segments_matrix(valid));
  std::vector<Vector> latents;
  latents.reserve(valid.size());
  for (Eigen::Index k = 0; k < z.cols(); ++k) latents.emplace_back(z.col(k));
  return compute_anchor(latents, cfg.anchor_exact_limit, stage_seed(cfg.seed, "anchor"));
}

A2CStage train_a2c_stage(const AutoencoderBundle& ae, const AnchorPoint& anchor, const std::vector<const Segment*>& train,
                         EqualizerKind kind, const RunConfig& cfg) {
  LatentEqualizerEnv env(train, ae, anchor, kind);
  A2CConfig ac = cfg.a2c;
  ac.seed = stage_seed(cfg.seed, "a2c-" + kind_suffix(kind));
  std::mt19937_64 rng(stage_seed(cfg.seed, "a2c-init-" + kind_suffix(kind)));
  A2CStage st{make_agent(env.state_dim(), env.action_dim(), ac, rng), {}};
  st.result = train_a2c(st.agent, env, ac);
  return st;
}

// ---- evaluation ----

SegmentOutcome evaluate_action(const Dataset& ds, std::size_t index, EqualizerKind kind, std::span<const double> action,
                               const AutoencoderBundle& ae, const AnchorPoint& anchor) {
  const Segment& raw = ds.items.at(index).output;
  const EyeGeometry geom = geometry_for(ds);
  SegmentOutcome o;
  o.index = index;
  o.origin = raw.origin;
  o.action.assign(action.begin(), action.end());
  o.physical = map_action(action, ParamRanges::for_kind(kind)).physical;
  const Segment eq = apply_chain(raw, setting_from_physical(kind, o.physical));
  o.area_before = eye_area(raw, geom);
  o.area_after = eye_area(eq, geom);
  if (o.area_before > 0.0) o.improvement = window_improvement(o.area_before, o.area_after);
  o.si_before = latent_si(ae, anchor, raw);
  o.si_after = latent_si(ae, anchor, eq);
  return o;
}

void summarize(MethodReport& r) {
  std::vector<double> imp;
  std::size_t improved = 0;
  r.undefined = 0;
  for (const auto& s : r.segments) {
    if (s.improvement) imp.push_back(*s.improvement);
    else ++r.undefined;
    if (s.area_after > s.area_before) ++improved;
  }
  r.mean_improvement = mean_of(imp);
  r.fraction_improved = r.segments.empty() ? 0.0 : static_cast<double>(improved) / static_cast<double>(r.segments.size());
}

json to_json(const MethodReport& r) {
  json segs = json::array();
  for (const auto& s : r.segments)
    segs.push_back({{"index", s.index},
                    {"origin", s.origin},
                    {"action", s.action},
                    {"physical", s.physical},
                    {"area_before", s.area_before},
                    {"area_after", s.area_after},
                    {"improvement", s.improvement ? json(*s.improvement) : json(nullptr)},
                    {"si_before", s.si_before},
                    {"si_after", s.si_after}});
  json j{{"method", r.method},
         {"equalizer", to_string(r.kind)},
         {"mean_improvement", r.mean_improvement},
         {"fraction_improved", r.fraction_improved},
         {"undefined_improvements", r.undefined},
         {"evaluations", {{"training", r.training_evaluations},
                          {"inference", r.inference_evaluations},
                          {"total", r.total_evaluations()}}},
         {"segments", segs}};
  if (r.wall_seconds) j["wall_seconds"] = *r.wall_seconds;
  return j;
}

void write_report_csv(const std::string& path, const MethodReport& r) {
  std::vector<std::vector<double>> rows;
  for (const auto& s : r.segments)
    rows.push_back({static_cast<double>(s.index), static_cast<double>(s.origin), s.area_before, s.area_after,
                    s.improvement ? *s.improvement : std::nan(""), s.si_before, s.si_after});
  write_csv(path, {"index", "origin", "area_before", "area_after", "improvement_pct", "si_before", "si_after"}, rows);
}

MethodReport evaluate_a2c(const A2CAgent& agent, std::size_t training_evaluations, const AutoencoderBundle& ae,
                          const AnchorPoint& anchor, const Dataset& ds, const std::vector<std::size_t>& idx,
                          EqualizerKind kind) {
  MethodReport r;
  r.method = "a2c";
  r.kind = kind;
  r.training_evaluations = training_evaluations;
  const Matrix z = encode_batch(ae, segments_matrix(output_pointers(ds, idx)));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Vector a = mean_action(agent, z.col(static_cast<Eigen::Index>(k)));
    r.segments.push_back(evaluate_action(ds, idx[k], kind, std::span<const double>(a.data(), a.size()), ae, anchor));
  }
  r.inference_evaluations = idx.size();
  summarize(r);
  return r;
}

std::string to_string(SearchObjective o) { return o == SearchObjective::latent ? "latent" : "eye"; }

SearchObjective parse_search_objective(const std::string& s) {
  if (s == "latent") return SearchObjective::latent;
  if (s == "eye") return SearchObjective::eye;
  throw ConfigError("unknown objective '" + s + "' (expected latent or eye)");
}

Objective segment_objective(const Segment& s, EqualizerKind kind, SearchObjective objective,
                            const AutoencoderBundle& ae, const AnchorPoint& anchor, const EyeGeometry& geom) {
  if (objective == SearchObjective::latent)
    return [&s, kind, &ae, &anchor](std::span<const double> a) { return latent_si(ae, anchor, equalize(s, kind, a)); };
  return [&s, kind, geom](std::span<const double> a) { return eye_area(equalize(s, kind, a), geom); };
}

MethodReport evaluate_search(const std::string& method, const RunConfig& cfg, const AutoencoderBundle& ae,
                             const AnchorPoint& anchor, const Dataset& ds, const std::vector<std::size_t>& idx,
                             EqualizerKind kind, SearchObjective objective, double budget) {
  const std::size_t d = action_dim(kind);
  const std::size_t levels = cfg.eval.grid_levels.value_or(default_grid_levels(d));
  double worst = 0.0;
  if (method == "grid") worst = pow_count(levels, d);
  else if (method == "ga") worst = static_cast<double>(cfg.ga.population * cfg.ga.max_generations);
  else if (method == "pso") worst = static_cast<double>(cfg.pso.particles * (cfg.pso.iterations + 1));
  else throw ConfigError("unknown search method '" + method + "'");
  if (worst > budget)
    throw BudgetError(method + " needs up to " + format_double(worst) + " evaluations per segment, budget is " +
                      format_double(budget));

  const EyeGeometry geom = geometry_for(ds);
  MethodReport r;
  r.method = method + "-" + to_string(objective);
  r.kind = kind;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Segment& s = ds.items.at(idx[k]).output;
    const Objective f = segment_objective(s, kind, objective, ae, anchor, geom);
    SearchResult res;
    const std::uint64_t seed = stage_seed(cfg.seed, method) + idx[k];
    if (method == "grid") res = run_grid(f, d, levels);
    else if (method == "ga") res = run_ga(f, d, cfg.ga, seed);
    else res = run_pso(f, d, cfg.pso, seed);
    r.inference_evaluations += res.evaluations;
    r.segments.push_back(evaluate_action(ds, idx[k], kind, res.best_action, ae, anchor));
  }
  summarize(r);
  return r;
}

MethodReport evaluate_qlearning(const RunConfig& cfg, const AutoencoderBundle& ae, const AnchorPoint& anchor,
                                const Dataset& ds, const std::vector<std::size_t>& train,
                                const std::vector<std::size_t>& idx, EqualizerKind kind, double budget) {
  const double worst = static_cast<double>(cfg.qlearning.max_epochs) * static_cast<double>(train.size());
  if (worst > budget)
    throw BudgetError("q-learning needs up to " + format_double(worst) + " evaluations, budget is " + format_double(budget));
  std::vector<const Segment*> inputs;
  for (std::size_t i : train) inputs.push_back(&ds.items.at(i).input);
  IdealMatchEnv env(output_pointers(ds, train), inputs, ae, kind);
  QLearningResult q = run_qlearning(env, cfg.qlearning, stage_seed(cfg.seed, "qlearning"));

  MethodReport r;
  r.method = "qlearning";
  r.kind = kind;
  r.training_evaluations = q.evaluations;
  const Matrix z = encode_batch(ae, segments_matrix(output_pointers(ds, idx)));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto a = greedy_action(q.net, z.col(static_cast<Eigen::Index>(k)));
    r.segments.push_back(evaluate_action(ds, idx[k], kind, a, ae, anchor));
  }
  r.inference_evaluations = idx.size();
  summarize(r);
  return r;
}

MethodReport evaluate_ddpg(const RunConfig& cfg, const AutoencoderBundle& ae, const AnchorPoint& anchor,
                           const Dataset& ds, const std::vector<std::size_t>& train,
                           const std::vector<std::size_t>& idx, EqualizerKind kind, double budget) {
  if (static_cast<double>(cfg.ddpg.episodes + 1) > budget)
    throw BudgetError("ddpg needs " + std::to_string(cfg.ddpg.episodes + 1) + " evaluations, budget is " +
                      format_double(budget));
  if (train.empty()) throw DataError("ddpg needs training segments");
  BerObjective ber = [&](std::span<const double> a, std::size_t episode) {
    const Segment& s = ds.items.at(train[episode % train.size()]).output;
    return compute_ber(equalize(s, kind, a), ds.bits);
  };
  DDPGResult res = run_ddpg(ber, action_dim(kind), cfg.ddpg, stage_seed(cfg.seed, "ddpg"));

  MethodReport r;
  r.method = "ddpg";
  r.kind = kind;
  r.training_evaluations = res.evaluations;
  for (std::size_t i : idx) r.segments.push_back(evaluate_action(ds, i, kind, res.action, ae, anchor));
  r.inference_evaluations = idx.size();
  summarize(r);
  return r;
}

// ---- SI comparison ----

CompareSiReport run_compare_si(const RunConfig& cfg, const Dataset& ds, const Split& split, const AutoencoderBundle& ae,
                               const AnchorPoint& anchor) {
  const EqualizerKind kind = cfg.equalizer;
  const std::size_t d = action_dim(kind);
  const EyeGeometry geom = geometry_for(ds);

  // tuning segments need an open raw eye so the relative eye objective is defined
  std::vector<std::size_t> open;
  std::vector<double> base_areas;
  for (std::size_t i : spaced_subset(split.train, split.train.size())) {
    const double a = eye_area(ds.items[i].output, geom);
    if (a > 0.0) open.push_back(i);
  }
  CompareSiReport rep;
  rep.kind = kind;
  rep.tuning = spaced_subset(open, cfg.eval.tuning_segments);
  if (rep.tuning.empty()) throw DataError("no training segment has an open eye to tune on");
  for (std::size_t i : rep.tuning) base_areas.push_back(eye_area(ds.items[i].output, geom));
  rep.eval = spaced_subset(split.test, cfg.eval.segments);

  auto run = [&](SearchObjective obj) {
    SiMethodSummary sum;
    sum.objective = obj;
    Objective f = [&](std::span<const double> a) {
      const auto t0 = Clock::now();
      double total = 0.0;
      for (std::size_t k = 0; k < rep.tuning.size(); ++k) {
        const Segment eq = equalize(ds.items[rep.tuning[k]].output, kind, a);
        total += obj == SearchObjective::latent ? latent_si(ae, anchor, eq)
                                                : 100.0 * (eye_area(eq, geom) / base_areas[k] - 1.0);
      }
      sum.objective_seconds += seconds_since(t0);
      return total / static_cast<double>(rep.tuning.size());
    };
    for (std::size_t t = 0; t < cfg.compare_si.trials; ++t) {
      const PsoResult res = run_pso(f, d, cfg.pso, stage_seed(cfg.seed, "compare-si-" + to_string(obj)) + t);
      sum.evaluations += res.evaluations;
      std::vector<double> imp;
      for (std::size_t i : rep.eval) {
        const double before = eye_area(ds.items[i].output, geom);
        if (before <= 0.0) continue;
        imp.push_back(window_improvement(before, eye_area(equalize(ds.items[i].output, kind, res.best_action), geom)));
      }
      sum.improvements.push_back(mean_of(imp));
    }
    sum.mean = mean_of(sum.improvements);
    sum.std = population_std(sum.improvements);
    return sum;
  };
  rep.latent = run(SearchObjective::latent);
  rep.eye = run(SearchObjective::eye);
  return rep;
}

json to_json(const CompareSiReport& r, bool record_timing) {
  auto one = [&](const SiMethodSummary& s) {
    json j{{"objective", to_string(s.objective)},
           {"improvements", s.improvements},
           {"mean_improvement", s.mean},
           {"std_improvement", s.std},
           {"evaluations", s.evaluations}};
    if (record_timing) j["per_evaluation_seconds"] = s.per_evaluation_seconds();
    return j;
  };
  json j{{"equalizer", to_string(r.kind)},
         {"tuning_segments", r.tuning},
         {"eval_segments", r.eval.size()},
         {"latent", one(r.latent)},
         {"eye", one(r.eye)}};
  if (record_timing && r.latent.per_evaluation_seconds() > 0.0)
    j["time_ratio_eye_over_latent"] = r.eye.per_evaluation_seconds() / r.latent.per_evaluation_seconds();
  return j;
}

// ---- generalization ----

const GeneralizeCell& GeneralizeReport::cell(const std::string& set, EqualizerKind kind) const {
  for (const auto& c : cells)
    if (c.set == set && c.kind == kind) return c;
  throw DataError("no generalization cell " + set + "/" + to_string(kind));
}

double GeneralizeReport::gap(EqualizerKind kind) const {
  return cell("training_units", kind).mean_improvement - cell("heldout_units", kind).mean_improvement;
}

ChannelConfig unit_channel(const RunConfig& cfg, std::size_t u) {
  const auto& g = cfg.generalize;
  if (!g.unit_channels.empty()) return channel_from_json(g.unit_channels.at(u), cfg.channel);
  ChannelConfig ch = cfg.channel;
  ch.seed = stage_seed(cfg.seed, "unit-" + std::to_string(u));
  std::mt19937_64 rng(stage_seed(cfg.seed, "unit-taps-" + std::to_string(u)));
  std::uniform_real_distribution<double> spread(-1.0, 1.0);
  for (double& t : ch.isi_taps) t *= 1.0 + g.perturbation * spread(rng);
  return ch;
}

GeneralizeReport run_generalize(const RunConfig& cfg, const std::vector<EqualizerKind>& kinds) {
  const auto t0 = Clock::now();
  const auto& g = cfg.generalize;
  GeneralizeReport rep;
  rep.training_units = g.units - g.heldout;

  std::vector<Dataset> units;
  std::vector<Split> splits;
  for (std::size_t u = 0; u < g.units; ++u) {
    rep.units.push_back(unit_channel(cfg, u));
    const ChannelConfig ch = data_channel(cfg, rep.units.back(), g.segments_per_unit);
    validate(ch);
    units.push_back(dataset_from_pair(synthesize_pair(ch), cfg.data.n_x, cfg.data.stride, g.segments_per_unit, cfg.mask,
                                      ch.swing));
    splits.push_back(split_dataset(units.back().items.size(), cfg.data));
  }

  std::vector<const LabeledSegment*> train_items;
  std::vector<const Segment*> train_outputs;
  for (std::size_t u = 0; u < rep.training_units; ++u)
    for (std::size_t i : splits[u].train) {
      train_items.push_back(&units[u].items[i]);
      train_outputs.push_back(&units[u].items[i].output);
    }
  const AutoencoderBundle ae = train_ae_stage(train_items, cfg.channel.swing, cfg).bundle;
  const AnchorPoint anchor = anchor_stage(ae, train_items, cfg);

  for (EqualizerKind kind : kinds) {
    const A2CStage st = train_a2c_stage(ae, anchor, train_outputs, kind, cfg);
    std::vector<double> imp[2];
    std::size_t count[2] = {0, 0}, undefined[2] = {0, 0};
    for (std::size_t u = 0; u < g.units; ++u) {
      const int set = u < rep.training_units ? 0 : 1;
      const auto idx = spaced_subset(splits[u].test, g.eval_segments_per_unit);
      const MethodReport r = evaluate_a2c(st.agent, st.result.evaluations, ae, anchor, units[u], idx, kind);
      for (const auto& s : r.segments) {
        ++count[set];
        if (s.improvement) imp[set].push_back(*s.improvement);
        else ++undefined[set];
      }
    }
    rep.cells.push_back({"training_units", kind, mean_of(imp[0]), count[0], undefined[0]});
    rep.cells.push_back({"heldout_units", kind, mean_of(imp[1]), count[1], undefined[1]});
  }
  rep.seconds = seconds_since(t0);
  return rep;
}

json to_json(const GeneralizeReport& r, bool record_timing) {
  json units = json::array();
  for (std::size_t u = 0; u < r.units.size(); ++u) {
    json c = to_json(r.units[u]);
    c["role"] = u < r.training_units ? "training" : "heldout";
    units.push_back(c);
  }
  json cells = json::array();
  json gaps = json::object();
  for (const auto& c : r.cells) {
    cells.push_back({{"set", c.set},
                     {"equalizer", to_string(c.kind)},
                     {"mean_improvement", c.mean_improvement},
                     {"segments", c.segments},
                     {"undefined_improvements", c.undefined}});
    if (c.set == "heldout_units") gaps[to_string(c.kind)] = r.gap(c.kind);
  }
  json j{{"units", units}, {"cells", cells}, {"gap", gaps}};
  if (record_timing) j["wall_seconds"] = r.seconds;
  return j;
}

// ---- commands ----

RunConfig resolve_config(const json& manifest_config, const json& patch) {
  json merged = manifest_config;
  merge_config(merged, patch);
  const RunConfig base = parse_config(manifest_config);
  const RunConfig cfg = parse_config(merged);
  const json a = to_json(base), b = to_json(cfg);
  for (const char* key : {"seed", "channel", "data", "mask"})
    if (a[key] != b[key])
      throw ConfigError(std::string("override changes '") + key + "', which must match the dataset manifest");
  return cfg;
}

namespace {

struct Loaded {
  RunConfig cfg;
  Dataset ds;
  Split split;
};

Loaded load_with(const std::string& manifest, const json& patch) {
  LoadedDataset ld = load_dataset(manifest);
  const json m = read_json_file(manifest);
  Loaded out{resolve_config(m.at("config"), patch), std::move(ld.data), {}};
  out.split = split_dataset(out.ds.items.size(), out.cfg.data);
  return out;
}

AutoencoderBundle load_ae(const std::string& path) {
  const json j = read_json_file(path);
  check_artifact(j, "autoencoder", path);
  return autoencoder_from_json(j.at("model"));
}

AnchorPoint load_anchor(const std::string& path) {
  const json j = read_json_file(path);
  check_artifact(j, "anchor", path);
  return anchor_from_json(j.at("anchor"));
}

void check_ae_fits(const AutoencoderBundle& ae, const RunConfig& cfg) {
  if (ae.n_x() != cfg.data.n_x)
    throw DataError("autoencoder expects " + std::to_string(ae.n_x()) + " samples per segment, data has " +
                    std::to_string(cfg.data.n_x));
}

std::string write_ae(const std::string& out_dir, const RunConfig& cfg, const AeTrainResult& res) {
  ensure_dir(out_dir);
  json j = artifact_header("autoencoder", cfg);
  j["model"] = to_json(res.bundle);
  j["train_segments"] = res.train_index.size();
  j["val_segments"] = res.val_index.size();
  std::vector<std::vector<double>> rows;
  for (std::size_t e = 0; e < res.trace.size(); ++e)
    rows.push_back({static_cast<double>(e), res.trace[e].reconstruction, res.trace[e].classification,
                    res.trace[e].total, res.trace[e].val_total});
  write_csv(join_path(out_dir, "autoencoder_trace.csv"),
            {"epoch", "reconstruction", "classification", "total", "val_total"}, rows);
  const std::string path = join_path(out_dir, "autoencoder.json");
  write_json_file(path, j);
  return path;
}

std::string write_anchor(const std::string& out_dir, const RunConfig& cfg, const AnchorPoint& anchor) {
  ensure_dir(out_dir);
  json j = artifact_header("anchor", cfg);
  j["anchor"] = to_json(anchor);
  const std::string path = join_path(out_dir, "anchor.json");
  write_json_file(path, j);
  return path;
}

std::string write_agent(const std::string& out_dir, const RunConfig& cfg, const A2CStage& st) {
  ensure_dir(out_dir);
  const EqualizerKind kind = cfg.equalizer;
  json j = artifact_header("a2c", cfg);
  j["equalizer"] = to_string(kind);
  j["agent"] = to_json(st.agent);
  j["updates"] = st.result.updates;
  j["evaluations"] = st.result.evaluations;
  j["epochs_run"] = st.result.trace.size();
  j["early_stopped"] = st.result.early_stopped;
  std::vector<std::vector<double>> rows;
  for (std::size_t e = 0; e < st.result.trace.size(); ++e) {
    const auto& t = st.result.trace[e];
    rows.push_back({static_cast<double>(e), t.mean_reward, t.policy_loss, t.value_loss, t.entropy, t.total_loss});
  }
  write_csv(join_path(out_dir, "a2c_" + kind_suffix(kind) + "_trace.csv"),
            {"epoch", "mean_reward", "policy_loss", "value_loss", "entropy", "total_loss"}, rows);
  const std::string path = join_path(out_dir, "a2c_" + kind_suffix(kind) + ".json");
  write_json_file(path, j);
  return path;
}

struct LoadedAgent {
  A2CAgent agent;
  EqualizerKind kind;
  std::size_t evaluations;
};

LoadedAgent load_agent(const std::string& path) {
  const json j = read_json_file(path);
  check_artifact(j, "a2c", path);
  return {a2c_agent_from_json(j.at("agent")), parse_equalizer_kind(j.at("equalizer").get<std::string>()),
          j.at("evaluations").get<std::size_t>()};
}

std::string write_optimized(const std::string& out_dir, const RunConfig& cfg, EqualizerKind kind,
                            std::size_t training_evaluations, const std::vector<std::size_t>& idx,
                            const std::vector<std::vector<double>>& actions) {
  ensure_dir(out_dir);
  json j = artifact_header("optimized", cfg);
  j["equalizer"] = to_string(kind);
  j["training_evaluations"] = training_evaluations;
  const ParamRanges ranges = ParamRanges::for_kind(kind);
  json segs = json::array();
  for (std::size_t k = 0; k < idx.size(); ++k)
    segs.push_back({{"index", idx[k]}, {"action", actions[k]}, {"physical", map_action(actions[k], ranges).physical}});
  j["segments"] = segs;
  const std::string path = join_path(out_dir, "optimized_" + kind_suffix(kind) + ".json");
  write_json_file(path, j);
  return path;
}

std::vector<std::vector<double>> policy_actions(const A2CAgent& agent, const AutoencoderBundle& ae, const Dataset& ds,
                                                const std::vector<std::size_t>& idx) {
  const Matrix z = encode_batch(ae, segments_matrix(output_pointers(ds, idx)));
  std::vector<std::vector<double>> out;
  for (Eigen::Index k = 0; k < z.cols(); ++k) {
    const Vector a = mean_action(agent, z.col(k));
    out.emplace_back(a.data(), a.data() + a.size());
  }
  return out;
}

std::string write_method_report(const std::string& out_dir, const std::string& stem, const RunConfig& cfg,
                                const MethodReport& r) {
  json j = artifact_header("report", cfg);
  j.update(to_json(r));
  const std::string path = join_path(out_dir, stem + ".json");
  write_json_file(path, j);
  write_report_csv(join_path(out_dir, stem + ".csv"), r);
  return path;
}

}  // namespace

std::string cmd_gen_data(const RunConfig& cfg, const std::string& out_dir) {
  const ChannelConfig ch = data_channel(cfg);
  const DataPair pair = synthesize_pair(ch);
  const Dataset ds = dataset_from_pair(pair, cfg.data.n_x, cfg.data.stride, cfg.data.n_segments, cfg.mask, ch.swing);
  return write_dataset(out_dir, cfg, pair, ds);
}

std::string cmd_train_ae(const std::string& manifest, const json& patch, const std::string& out_dir) {
  const Loaded l = load_with(manifest, patch);
  return write_ae(out_dir, l.cfg, train_ae_stage(item_pointers(l.ds, l.split.train), l.ds.swing, l.cfg));
}

std::string cmd_anchor(const std::string& manifest, const std::string& ae_path, const json& patch,
                       const std::string& out_dir) {
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, l.cfg);
  return write_anchor(out_dir, l.cfg, anchor_stage(ae, item_pointers(l.ds, l.split.train), l.cfg));
}

std::string cmd_train_a2c(const std::string& manifest, const std::string& ae_path, const std::string& anchor_path,
                          const json& patch, const std::string& out_dir) {
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, l.cfg);
  const AnchorPoint anchor = load_anchor(anchor_path);
  const A2CStage st = train_a2c_stage(ae, anchor, output_pointers(l.ds, l.split.train), l.cfg.equalizer, l.cfg);
  return write_agent(out_dir, l.cfg, st);
}

std::string cmd_optimize(const std::string& manifest, const std::string& ae_path, const std::string& agent_path,
                         const json& patch, const std::string& out_dir) {
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, l.cfg);
  const LoadedAgent la = load_agent(agent_path);
  if (la.agent.state_dim() != ae.latent_dim()) throw DataError("agent state dimension does not match the autoencoder");
  const auto idx = spaced_subset(l.split.test, l.cfg.eval.segments);
  return write_optimized(out_dir, l.cfg, la.kind, la.evaluations, idx, policy_actions(la.agent, ae, l.ds, idx));
}

std::string cmd_evaluate(const std::string& manifest, const std::string& ae_path, const std::string& anchor_path,
                         const std::string& optimized_path, const json& patch, const std::string& out_dir,
                         bool record_timing) {
  const auto t0 = Clock::now();
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, l.cfg);
  const AnchorPoint anchor = load_anchor(anchor_path);
  const json opt = read_json_file(optimized_path);
  check_artifact(opt, "optimized", optimized_path);
  MethodReport r;
  r.method = "a2c";
  r.kind = parse_equalizer_kind(opt.at("equalizer").get<std::string>());
  r.training_evaluations = opt.at("training_evaluations").get<std::size_t>();
  for (const auto& s : opt.at("segments")) {
    const auto index = s.at("index").get<std::size_t>();
    if (index >= l.ds.items.size()) throw DataError(optimized_path + ": segment index out of range");
    const auto action = s.at("action").get<std::vector<double>>();
    if (action.size() != action_dim(r.kind)) throw ShapeError(optimized_path + ": action dimension mismatch");
    r.segments.push_back(evaluate_action(l.ds, index, r.kind, action, ae, anchor));
  }
  r.inference_evaluations = r.segments.size();
  summarize(r);
  if (record_timing) r.wall_seconds = seconds_since(t0);
  ensure_dir(out_dir);
  return write_method_report(out_dir, "report_" + kind_suffix(r.kind), l.cfg, r);
}

std::string cmd_pipeline(const RunConfig& cfg, const std::string& out_dir, bool record_timing) {
  const auto t0 = Clock::now();
  ensure_dir(out_dir);
  const json patch = to_json(cfg);

  std::string manifest = join_path(out_dir, "manifest.json");
  if (!artifact_matches(manifest, "dataset", cfg)) manifest = cmd_gen_data(cfg, out_dir);
  std::string ae_path = join_path(out_dir, "autoencoder.json");
  if (!artifact_matches(ae_path, "autoencoder", cfg)) ae_path = cmd_train_ae(manifest, patch, out_dir);
  std::string anchor_path = join_path(out_dir, "anchor.json");
  if (!artifact_matches(anchor_path, "anchor", cfg)) anchor_path = cmd_anchor(manifest, ae_path, patch, out_dir);
  const std::string suffix = kind_suffix(cfg.equalizer);
  std::string agent_path = join_path(out_dir, "a2c_" + suffix + ".json");
  if (!artifact_matches(agent_path, "a2c", cfg))
    agent_path = cmd_train_a2c(manifest, ae_path, anchor_path, patch, out_dir);
  std::string opt_path = join_path(out_dir, "optimized_" + suffix + ".json");
  if (!artifact_matches(opt_path, "optimized", cfg)) opt_path = cmd_optimize(manifest, ae_path, agent_path, patch, out_dir);
  const std::string report_path =
      cmd_evaluate(manifest, ae_path, anchor_path, opt_path, patch, out_dir, record_timing);

  // grid search on the same segments with the same latent evaluator
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  const AnchorPoint anchor = load_anchor(anchor_path);
  const auto idx = spaced_subset(l.split.test, cfg.eval.segments);
  const auto tg = Clock::now();
  MethodReport grid = evaluate_search("grid", cfg, ae, anchor, l.ds, idx, cfg.equalizer, SearchObjective::latent,
                                      kGridBudget);
  if (record_timing) grid.wall_seconds = seconds_since(tg);
  write_method_report(out_dir, "grid_" + suffix, cfg, grid);

  const json a2c = read_json_file(report_path);
  json summary = artifact_header("pipeline", cfg);
  summary["equalizer"] = to_string(cfg.equalizer);
  summary["eval_segments"] = idx.size();
  auto row = [](const json& r) {
    return json{{"mean_improvement", r.at("mean_improvement")},
                {"fraction_improved", r.at("fraction_improved")},
                {"evaluations", r.at("evaluations").at("total")}};
  };
  summary["methods"] = {{"a2c", row(a2c)}, {"grid-latent", row(to_json(grid))}};
  summary["artifacts"] = {{"manifest", "manifest.json"},
                          {"autoencoder", "autoencoder.json"},
                          {"anchor", "anchor.json"},
                          {"agent", "a2c_" + suffix + ".json"},
                          {"optimized", "optimized_" + suffix + ".json"},
                          {"report", "report_" + suffix + ".json"},
                          {"grid", "grid_" + suffix + ".json"}};
  if (record_timing) summary["wall_seconds"] = seconds_since(t0);
  const std::string path = join_path(out_dir, "pipeline_" + suffix + ".json");
  write_json_file(path, summary);
  return path;
}

std::string cmd_compare_si(const std::string& manifest, const std::string& ae_path, const std::string& anchor_path,
                           const json& patch, const std::string& out_dir, bool record_timing) {
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, l.cfg);
  const AnchorPoint anchor = load_anchor(anchor_path);
  const CompareSiReport rep = run_compare_si(l.cfg, l.ds, l.split, ae, anchor);
  ensure_dir(out_dir);
  json j = artifact_header("compare-si", l.cfg);
  j.update(to_json(rep, record_timing));
  const std::string path = join_path(out_dir, "compare_si.json");
  write_json_file(path, j);
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < rep.latent.improvements.size(); ++t)
    rows.push_back({static_cast<double>(t), rep.latent.improvements[t], rep.eye.improvements[t]});
  write_csv(join_path(out_dir, "compare_si.csv"), {"trial", "latent_improvement_pct", "eye_improvement_pct"}, rows);
  return path;
}

std::string cmd_generalize(const RunConfig& cfg, const std::string& out_dir, bool record_timing) {
  const GeneralizeReport rep = run_generalize(cfg, {EqualizerKind::dfe, EqualizerKind::ctle_dfe});
  ensure_dir(out_dir);
  json j = artifact_header("generalize", cfg);
  j.update(to_json(rep, record_timing));
  const std::string path = join_path(out_dir, "generalize.json");
  write_json_file(path, j);
  return path;
}

std::string cmd_baseline(const std::string& method, const std::string& manifest, const std::string& ae_path,
                         const std::string& anchor_path, SearchObjective objective, double budget, const json& patch,
                         const std::string& out_dir, bool record_timing) {
  const auto t0 = Clock::now();
  const Loaded l = load_with(manifest, patch);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, l.cfg);
  const AnchorPoint anchor = load_anchor(anchor_path);
  const auto idx = spaced_subset(l.split.test, l.cfg.eval.segments);
  const EqualizerKind kind = l.cfg.equalizer;
  MethodReport r;
  if (method == "grid" || method == "ga" || method == "pso")
    r = evaluate_search(method, l.cfg, ae, anchor, l.ds, idx, kind, objective, budget);
  else if (method == "qlearn")
    r = evaluate_qlearning(l.cfg, ae, anchor, l.ds, l.split.train, idx, kind, budget);
  else if (method == "ddpg")
    r = evaluate_ddpg(l.cfg, ae, anchor, l.ds, l.split.train, idx, kind, budget);
  else
    throw ConfigError("unknown baseline '" + method + "' (expected ga, pso, grid, qlearn or ddpg)");
  if (record_timing) r.wall_seconds = seconds_since(t0);
  ensure_dir(out_dir);
  return write_method_report(out_dir, "baseline_" + r.method + "_" + kind_suffix(kind), l.cfg, r);
}

std::string cmd_export_eye(const std::string& manifest, std::size_t index, const std::string& optimized_path,
                           const std::string& out_dir) {
  const LoadedDataset ld = load_dataset(manifest);
  if (index >= ld.data.items.size()) throw DataError("segment index " + std::to_string(index) + " out of range");
  ensure_dir(out_dir);
  const EyeGeometry geom = geometry_for(ld.data);
  auto dump = [&](const Segment& s, const std::string& stem) {
    const EyeDiagram eye = fold_eye(s, geom);
    const EyeWindow w = largest_window(eye);
    write_eye_csv(join_path(out_dir, stem + ".csv"), eye);
    std::ofstream svg(join_path(out_dir, stem + ".svg"));
    if (!svg) throw DataError("cannot write " + stem + ".svg");
    svg << render_eye_svg(eye, w, ld.config.mask);
  };
  const std::string stem = "eye_" + std::to_string(index);
  dump(ld.data.items[index].output, stem + "_raw");
  if (!optimized_path.empty()) {
    const json opt = read_json_file(optimized_path);
    check_artifact(opt, "optimized", optimized_path);
    const EqualizerKind kind = parse_equalizer_kind(opt.at("equalizer").get<std::string>());
    bool found = false;
    for (const auto& s : opt.at("segments"))
      if (s.at("index").get<std::size_t>() == index) {
        dump(equalize(ld.data.items[index].output, kind, s.at("action").get<std::vector<double>>()), stem + "_eq");
        found = true;
      }
    if (!found) throw DataError(optimized_path + " has no action for segment " + std::to_string(index));
  }
  return join_path(out_dir, stem + "_raw.svg");
}

std::string cmd_export_latents(const std::string& manifest, const std::string& ae_path, const std::string& out_dir) {
  const LoadedDataset ld = load_dataset(manifest);
  const AutoencoderBundle ae = load_ae(ae_path);
  check_ae_fits(ae, ld.config);
  std::vector<std::size_t> all(ld.data.items.size());
  std::iota(all.begin(), all.end(), 0);
  const Matrix z = encode_batch(ae, segments_matrix(output_pointers(ld.data, all)));
  std::vector<std::string> header{"index", "origin", "label"};
  for (std::size_t k = 0; k < ae.latent_dim(); ++k) header.push_back("z" + std::to_string(k));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::vector<double> row{static_cast<double>(i), static_cast<double>(ld.data.items[i].output.origin),
                            static_cast<double>(ld.data.items[i].label.y)};
    for (Eigen::Index k = 0; k < z.rows(); ++k) row.push_back(z(k, static_cast<Eigen::Index>(i)));
    rows.push_back(std::move(row));
  }
  ensure_dir(out_dir);
  const std::string path = join_path(out_dir, "latents.csv");
  write_csv(path, header, rows);
  return path;
}

}  // namespace eqopt

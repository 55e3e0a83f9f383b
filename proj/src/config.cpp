#include "eqopt/config.hpp"

#include <cstdio>

#include "eqopt/errors.hpp"

namespace eqopt {

using nlohmann::json;

namespace {

json sizes_to_json(const std::vector<std::size_t>& v) { return json(v); }

json opt_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Reads `key` from `j` into `out`, converting type errors to ConfigError.
template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(section + "." + key + ": " + e.what());
  }
}

void check_keys(const json& patch, const json& defaults, const std::string& path) {
  if (!patch.is_object()) throw ConfigError((path.empty() ? "config" : path) + ": expected an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    auto it = defaults.find(key);
    if (it == defaults.end()) throw ConfigError("unknown config key: " + sub);
    if (it->is_object() && !value.is_null()) check_keys(value, *it, sub);
  }
}

}  // namespace

json to_json(const ChannelConfig& c) {
  return json{{"seed", c.seed},
              {"swing", c.swing},
              {"main_cursor", c.main_cursor},
              {"isi_taps", c.isi_taps},
              {"lp_pole_ghz", opt_to_json(c.lp_pole_ghz)},
              {"noise_sigma", c.noise_sigma},
              {"dt", c.dt},
              {"ui", c.ui},
              {"rx_phase_ps", c.rx_phase_ps}};
}

ChannelConfig channel_from_json(const json& j, const ChannelConfig& base) {
  if (!j.is_object()) throw ConfigError("channel: expected an object");
  ChannelConfig c = base;
  for (const auto& [key, _] : j.items()) {
    static const char* known[] = {"seed", "swing", "main_cursor", "isi_taps", "lp_pole_ghz",
                                  "noise_sigma", "dt", "ui", "rx_phase_ps"};
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key: channel." + key);
  }
  read(j, "seed", c.seed, "channel");
  read(j, "swing", c.swing, "channel");
  read(j, "main_cursor", c.main_cursor, "channel");
  read(j, "isi_taps", c.isi_taps, "channel");
  if (auto it = j.find("lp_pole_ghz"); it != j.end()) {
    if (it->is_null()) c.lp_pole_ghz.reset();
    else read(j, "lp_pole_ghz", c.lp_pole_ghz.emplace(), "channel");
  }
  read(j, "noise_sigma", c.noise_sigma, "channel");
  read(j, "dt", c.dt, "channel");
  read(j, "ui", c.ui, "channel");
  read(j, "rx_phase_ps", c.rx_phase_ps, "channel");
  return c;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["channel"] = to_json(cfg.channel);
  j["data"] = {{"n_x", cfg.data.n_x},
               {"n_segments", cfg.data.n_segments},
               {"stride", cfg.data.stride},
               {"test_fraction", cfg.data.test_fraction}};
  j["mask"] = {{"width", cfg.mask.width},
               {"height", cfg.mask.height},
               {"center_t", cfg.mask.center_t},
               {"center_v", cfg.mask.center_v}};
  j["equalizer"] = to_string(cfg.equalizer);
  const auto& ae = cfg.autoencoder;
  j["autoencoder"] = {{"latent_dim", ae.latent_dim},     {"hidden", sizes_to_json(ae.hidden)},
                      {"lr", ae.lr},                     {"weight_decay", ae.weight_decay},
                      {"batch", ae.batch},               {"epochs", ae.epochs},
                      {"val_fraction", ae.val_fraction}, {"classify_invalid", ae.classify_invalid}};
  j["anchor"] = {{"exact_limit", cfg.anchor_exact_limit}};
  const auto& a = cfg.a2c;
  j["a2c"] = {{"lr", a.lr},
              {"gamma", a.gamma},
              {"entropy_coef", a.entropy_coef},
              {"value_coef", a.value_coef},
              {"epochs", a.epochs},
              {"batch", a.batch},
              {"hidden", sizes_to_json(a.hidden)},
              {"init_log_std", a.init_log_std},
              {"early_stop_tol", a.early_stop_tol},
              {"early_stop_patience", a.early_stop_patience},
              {"terminal_episodes", a.terminal_episodes}};
  j["eval"] = {{"segments", cfg.eval.segments},
               {"tuning_segments", cfg.eval.tuning_segments},
               {"grid_levels", cfg.eval.grid_levels ? json(*cfg.eval.grid_levels) : json(nullptr)}};
  j["ga"] = {{"population", cfg.ga.population}, {"mutation", cfg.ga.mutation},
             {"epsilon", cfg.ga.epsilon},       {"patience", cfg.ga.patience},
             {"max_generations", cfg.ga.max_generations}, {"elites", cfg.ga.elites}};
  j["pso"] = {{"particles", cfg.pso.particles}, {"inertia", cfg.pso.inertia},
              {"cognitive", cfg.pso.cognitive}, {"social", cfg.pso.social},
              {"iterations", cfg.pso.iterations}};
  const auto& q = cfg.qlearning;
  j["qlearning"] = {{"levels", q.levels},
                    {"replay_capacity", q.replay_capacity},
                    {"batch", q.batch},
                    {"eps_start", q.eps_start},
                    {"eps_decay", q.eps_decay},
                    {"eps_floor", q.eps_floor},
                    {"lr", q.lr},
                    {"lr_step_epochs", q.lr_step_epochs},
                    {"lr_floor", q.lr_floor},
                    {"stop_window", q.stop_window},
                    {"stop_std", q.stop_std},
                    {"max_epochs", q.max_epochs},
                    {"train_every", q.train_every},
                    {"hidden", sizes_to_json(q.hidden)}};
  const auto& d = cfg.ddpg;
  j["ddpg"] = {{"replay_capacity", d.replay_capacity},
               {"noise_sigma", d.noise_sigma},
               {"noise_clip", d.noise_clip},
               {"tau", d.tau},
               {"gamma", d.gamma},
               {"actor_lr", d.actor_lr},
               {"critic_lr", d.critic_lr},
               {"batch", d.batch},
               {"episodes", d.episodes},
               {"hidden", sizes_to_json(d.hidden)}};
  j["compare_si"] = {{"trials", cfg.compare_si.trials}};
  const auto& g = cfg.generalize;
  j["generalize"] = {{"units", g.units},
                     {"heldout", g.heldout},
                     {"perturbation", g.perturbation},
                     {"segments_per_unit", g.segments_per_unit},
                     {"eval_segments_per_unit", g.eval_segments_per_unit},
                     {"unit_channels", json(g.unit_channels)}};
  j["output_dir"] = cfg.output_dir;
  return j;
}

json default_config_json() {
  RunConfig cfg;
  cfg.channel = ChannelConfig::stressed(1);
  return to_json(cfg);
}

json desk_preset_json() {
  return json{{"data", {{"n_x", 1000}, {"n_segments", 2000}, {"stride", 25}}},
              {"autoencoder", {{"epochs", 40}}},
              {"a2c", {{"epochs", 60}}}};
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must be key=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  const json defaults = default_config_json();
  const json* def = &defaults;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty() || !def->is_object() || !def->contains(key))
      throw ConfigError("unknown config key: " + path);
    def = &(*def)[key];
    if (!node->is_object()) *node = json::object();
    node = &(*node)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

void merge_config(json& doc, const json& patch) {
  if (!patch.is_object()) return;
  doc.merge_patch(patch);
  // merge_patch drops nulls; restore the nullable keys the patch set to null.
  for (const auto& [section, key] : {std::pair{"channel", "lp_pole_ghz"}, std::pair{"eval", "grid_levels"}})
    if (patch.contains(section) && patch[section].is_object() && patch[section].contains(key) &&
        patch[section][key].is_null())
      doc[section][key] = nullptr;
}

RunConfig parse_config(const json& patch) {
  json doc = default_config_json();
  if (!patch.is_null()) check_keys(patch, doc, "");
  merge_config(doc, patch);

  RunConfig cfg;
  read(doc, "seed", cfg.seed, "config");
  cfg.channel = channel_from_json(doc["channel"], ChannelConfig::stressed(1));

  const json& data = doc["data"];
  read(data, "n_x", cfg.data.n_x, "data");
  read(data, "n_segments", cfg.data.n_segments, "data");
  read(data, "stride", cfg.data.stride, "data");
  read(data, "test_fraction", cfg.data.test_fraction, "data");

  const json& mask = doc["mask"];
  read(mask, "width", cfg.mask.width, "mask");
  read(mask, "height", cfg.mask.height, "mask");
  read(mask, "center_t", cfg.mask.center_t, "mask");
  read(mask, "center_v", cfg.mask.center_v, "mask");

  std::string kind;
  read(doc, "equalizer", kind, "config");
  try {
    cfg.equalizer = parse_equalizer_kind(kind);
  } catch (const Error& e) {
    throw ConfigError(std::string("equalizer: ") + e.what());
  }

  const json& ae = doc["autoencoder"];
  read(ae, "latent_dim", cfg.autoencoder.latent_dim, "autoencoder");
  read(ae, "hidden", cfg.autoencoder.hidden, "autoencoder");
  read(ae, "lr", cfg.autoencoder.lr, "autoencoder");
  read(ae, "weight_decay", cfg.autoencoder.weight_decay, "autoencoder");
  read(ae, "batch", cfg.autoencoder.batch, "autoencoder");
  read(ae, "epochs", cfg.autoencoder.epochs, "autoencoder");
  read(ae, "val_fraction", cfg.autoencoder.val_fraction, "autoencoder");
  read(ae, "classify_invalid", cfg.autoencoder.classify_invalid, "autoencoder");
  read(doc["anchor"], "exact_limit", cfg.anchor_exact_limit, "anchor");

  const json& a = doc["a2c"];
  read(a, "lr", cfg.a2c.lr, "a2c");
  read(a, "gamma", cfg.a2c.gamma, "a2c");
  read(a, "entropy_coef", cfg.a2c.entropy_coef, "a2c");
  read(a, "value_coef", cfg.a2c.value_coef, "a2c");
  read(a, "epochs", cfg.a2c.epochs, "a2c");
  read(a, "batch", cfg.a2c.batch, "a2c");
  read(a, "hidden", cfg.a2c.hidden, "a2c");
  read(a, "init_log_std", cfg.a2c.init_log_std, "a2c");
  read(a, "early_stop_tol", cfg.a2c.early_stop_tol, "a2c");
  read(a, "early_stop_patience", cfg.a2c.early_stop_patience, "a2c");
  read(a, "terminal_episodes", cfg.a2c.terminal_episodes, "a2c");

  const json& ev = doc["eval"];
  read(ev, "segments", cfg.eval.segments, "eval");
  read(ev, "tuning_segments", cfg.eval.tuning_segments, "eval");
  if (!ev["grid_levels"].is_null()) read(ev, "grid_levels", cfg.eval.grid_levels.emplace(), "eval");

  const json& ga = doc["ga"];
  read(ga, "population", cfg.ga.population, "ga");
  read(ga, "mutation", cfg.ga.mutation, "ga");
  read(ga, "epsilon", cfg.ga.epsilon, "ga");
  read(ga, "patience", cfg.ga.patience, "ga");
  read(ga, "max_generations", cfg.ga.max_generations, "ga");
  read(ga, "elites", cfg.ga.elites, "ga");

  const json& pso = doc["pso"];
  read(pso, "particles", cfg.pso.particles, "pso");
  read(pso, "inertia", cfg.pso.inertia, "pso");
  read(pso, "cognitive", cfg.pso.cognitive, "pso");
  read(pso, "social", cfg.pso.social, "pso");
  read(pso, "iterations", cfg.pso.iterations, "pso");

  const json& q = doc["qlearning"];
  auto& qc = cfg.qlearning;
  read(q, "levels", qc.levels, "qlearning");
  read(q, "replay_capacity", qc.replay_capacity, "qlearning");
  read(q, "batch", qc.batch, "qlearning");
  read(q, "eps_start", qc.eps_start, "qlearning");
  read(q, "eps_decay", qc.eps_decay, "qlearning");
  read(q, "eps_floor", qc.eps_floor, "qlearning");
  read(q, "lr", qc.lr, "qlearning");
  read(q, "lr_step_epochs", qc.lr_step_epochs, "qlearning");
  read(q, "lr_floor", qc.lr_floor, "qlearning");
  read(q, "stop_window", qc.stop_window, "qlearning");
  read(q, "stop_std", qc.stop_std, "qlearning");
  read(q, "max_epochs", qc.max_epochs, "qlearning");
  read(q, "train_every", qc.train_every, "qlearning");
  read(q, "hidden", qc.hidden, "qlearning");

  const json& d = doc["ddpg"];
  auto& dc = cfg.ddpg;
  read(d, "replay_capacity", dc.replay_capacity, "ddpg");
  read(d, "noise_sigma", dc.noise_sigma, "ddpg");
  read(d, "noise_clip", dc.noise_clip, "ddpg");
  read(d, "tau", dc.tau, "ddpg");
  read(d, "gamma", dc.gamma, "ddpg");
  read(d, "actor_lr", dc.actor_lr, "ddpg");
  read(d, "critic_lr", dc.critic_lr, "ddpg");
  read(d, "batch", dc.batch, "ddpg");
  read(d, "episodes", dc.episodes, "ddpg");
  read(d, "hidden", dc.hidden, "ddpg");

  read(doc["compare_si"], "trials", cfg.compare_si.trials, "compare_si");

  const json& g = doc["generalize"];
  auto& gc = cfg.generalize;
  read(g, "units", gc.units, "generalize");
  read(g, "heldout", gc.heldout, "generalize");
  read(g, "perturbation", gc.perturbation, "generalize");
  read(g, "segments_per_unit", gc.segments_per_unit, "generalize");
  read(g, "eval_segments_per_unit", gc.eval_segments_per_unit, "generalize");
  if (const json& uc = g["unit_channels"]; !uc.is_null()) {
    if (!uc.is_array()) throw ConfigError("generalize.unit_channels: expected an array");
    gc.unit_channels.assign(uc.begin(), uc.end());
  }
  read(doc, "output_dir", cfg.output_dir, "config");

  cfg.autoencoder.seed = stage_seed(cfg.seed, "autoencoder");
  cfg.a2c.seed = stage_seed(cfg.seed, "a2c");
  validate(cfg);
  return cfg;
}

void validate(const RunConfig& cfg) {
  auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  wrap("channel", [&] { validate(cfg.channel); });
  wrap("mask", [&] { validate(cfg.mask, cfg.channel.ui); });
  wrap("a2c", [&] { validate(cfg.a2c); });
  if (cfg.data.n_x == 0 || cfg.data.stride == 0 || cfg.data.n_segments < 2)
    throw ConfigError("data: n_x and stride must be positive and n_segments >= 2");
  if (!(cfg.data.test_fraction > 0.0 && cfg.data.test_fraction < 1.0))
    throw ConfigError("data.test_fraction must lie in (0, 1)");
  if (cfg.autoencoder.latent_dim == 0 || cfg.autoencoder.batch == 0 || !(cfg.autoencoder.lr > 0.0))
    throw ConfigError("autoencoder: latent_dim, batch and lr must be positive");
  if (!(cfg.autoencoder.val_fraction >= 0.0 && cfg.autoencoder.val_fraction < 1.0))
    throw ConfigError("autoencoder.val_fraction must lie in [0, 1)");
  if (cfg.anchor_exact_limit == 0) throw ConfigError("anchor.exact_limit must be positive");
  if (cfg.eval.segments == 0 || cfg.eval.tuning_segments == 0)
    throw ConfigError("eval: segments and tuning_segments must be positive");
  if (cfg.eval.grid_levels && *cfg.eval.grid_levels < 2) throw ConfigError("eval.grid_levels must be >= 2");
  if (cfg.ga.population < 2 || cfg.ga.elites >= cfg.ga.population || !(cfg.ga.epsilon > 0.0) ||
      cfg.ga.max_generations == 0)
    throw ConfigError("ga: population >= 2, elites < population, epsilon > 0, max_generations > 0");
  if (cfg.pso.particles == 0 || cfg.pso.iterations == 0) throw ConfigError("pso: particles and iterations > 0");
  const auto& q = cfg.qlearning;
  if (q.levels < 2 || q.batch == 0 || q.replay_capacity < q.batch || q.train_every == 0 || q.max_epochs == 0 ||
      q.stop_window == 0 || q.lr_step_epochs == 0)
    throw ConfigError("qlearning: levels >= 2 and positive batch, capacity, train_every, epochs, windows");
  const auto& d = cfg.ddpg;
  if (d.batch == 0 || d.replay_capacity < d.batch || d.episodes == 0 || !(d.tau > 0.0 && d.tau <= 1.0))
    throw ConfigError("ddpg: positive batch and episodes, capacity >= batch, tau in (0, 1]");
  if (cfg.compare_si.trials == 0) throw ConfigError("compare_si.trials must be positive");
  const auto& g = cfg.generalize;
  if (g.units < 2 || g.heldout == 0 || g.heldout >= g.units)
    throw ConfigError("generalize: need at least one training and one held-out unit");
  if (!g.unit_channels.empty() && g.unit_channels.size() != g.units)
    throw ConfigError("generalize.unit_channels must list one entry per unit");
  if (g.segments_per_unit < 2 || g.eval_segments_per_unit == 0 || g.perturbation < 0.0)
    throw ConfigError("generalize: segments_per_unit >= 2, eval_segments_per_unit > 0, perturbation >= 0");
}

std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage) {
  // splitmix64 of seed xor the FNV hash of the tag
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : stage) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = seed ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string config_hash(const json& doc) {
  const std::string canonical = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eqopt

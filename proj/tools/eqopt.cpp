#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eqopt/config.hpp"
#include "eqopt/errors.hpp"
#include "eqopt/io.hpp"
#include "eqopt/pipeline.hpp"

using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool record_timing = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (partial documents are merged over defaults)");
  cmd->add_option("--preset", f.preset, "named preset applied before --config")->check(CLI::IsMember({"desk"}));
  cmd->add_option("--set", f.sets, "dotted override, e.g. a2c.epochs=10 (repeatable)");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--record-timing", f.record_timing, "include wall-clock timings in reports");
}

json build_patch(const ConfigFlags& f) {
  json patch = json::object();
  if (f.preset == "desk") patch.merge_patch(eqopt::desk_preset_json());
  if (!f.config_path.empty()) {
    json file = eqopt::read_json_file(f.config_path);
    if (!file.is_object()) throw eqopt::ConfigError(f.config_path + ": expected a JSON object");
    eqopt::merge_config(patch, file);
  }
  for (const auto& s : f.sets) eqopt::apply_override(patch, s);
  if (f.seed) patch["seed"] = *f.seed;
  return patch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equalizer parameter optimization in a learned latent space"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string manifest, ae_path, anchor_path, agent_path, optimized_path, objective = "latent";
  std::size_t index = 0;
  double budget = eqopt::kGridBudget;

  auto need_manifest = [&](CLI::App* c) { c->add_option("--manifest", manifest, "dataset manifest.json")->required(); };
  auto need_ae = [&](CLI::App* c) { c->add_option("--ae", ae_path, "autoencoder checkpoint")->required(); };
  auto need_anchor = [&](CLI::App* c) { c->add_option("--anchor", anchor_path, "anchor JSON")->required(); };

  auto* gen = app.add_subcommand("gen-data", "synthesize a labeled dataset");
  add_config_flags(gen, flags);

  auto* tae = app.add_subcommand("train-ae", "train the autoencoder and classifier");
  add_config_flags(tae, flags);
  need_manifest(tae);

  auto* anc = app.add_subcommand("anchor", "compute the anchor from valid training latents");
  add_config_flags(anc, flags);
  need_manifest(anc);
  need_ae(anc);

  auto* ta2c = app.add_subcommand("train-a2c", "train the A2C agent");
  add_config_flags(ta2c, flags);
  need_manifest(ta2c);
  need_ae(ta2c);
  need_anchor(ta2c);

  auto* opt = app.add_subcommand("optimize", "infer equalizer parameters for held-out segments");
  add_config_flags(opt, flags);
  need_manifest(opt);
  need_ae(opt);
  opt->add_option("--agent", agent_path, "A2C checkpoint")->required();

  auto* eval = app.add_subcommand("evaluate", "eye-window improvement of optimized parameters");
  add_config_flags(eval, flags);
  need_manifest(eval);
  need_ae(eval);
  need_anchor(eval);
  eval->add_option("--optimized", optimized_path, "optimize output")->required();

  auto* pipe = app.add_subcommand("pipeline", "run every stage, resuming from matching artifacts");
  add_config_flags(pipe, flags);

  auto* csi = app.add_subcommand("compare-si", "PSO with latent vs eye-diagram objectives");
  add_config_flags(csi, flags);
  need_manifest(csi);
  need_ae(csi);
  need_anchor(csi);

  auto* gen_units = app.add_subcommand("generalize", "train on some units, evaluate on held-out units");
  add_config_flags(gen_units, flags);

  auto* base = app.add_subcommand("baseline", "run a baseline optimizer");
  add_config_flags(base, flags);
  std::string method;
  base->add_option("method", method, "ga | pso | grid | qlearn | ddpg")
      ->required()
      ->check(CLI::IsMember({"ga", "pso", "grid", "qlearn", "ddpg"}));
  need_manifest(base);
  need_ae(base);
  need_anchor(base);
  base->add_option("--objective", objective, "latent or eye (ga, pso, grid)")->check(CLI::IsMember({"latent", "eye"}));
  base->add_option("--budget", budget, "maximum objective evaluations per search");

  auto* eye = app.add_subcommand("export-eye", "eye diagram CSV and SVG of one segment");
  add_config_flags(eye, flags);
  need_manifest(eye);
  eye->add_option("--index", index, "dataset segment index")->required();
  eye->add_option("--optimized", optimized_path, "also export the equalized segment");

  auto* lat = app.add_subcommand("export-latents", "latent vectors of every segment");
  add_config_flags(lat, flags);
  need_manifest(lat);
  need_ae(lat);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const json patch = build_patch(flags);
    const std::string& out = flags.out;
    std::string result;
    if (*gen) result = eqopt::cmd_gen_data(eqopt::parse_config(patch), out);
    else if (*tae) result = eqopt::cmd_train_ae(manifest, patch, out);
    else if (*anc) result = eqopt::cmd_anchor(manifest, ae_path, patch, out);
    else if (*ta2c) result = eqopt::cmd_train_a2c(manifest, ae_path, anchor_path, patch, out);
    else if (*opt) result = eqopt::cmd_optimize(manifest, ae_path, agent_path, patch, out);
    else if (*eval) result = eqopt::cmd_evaluate(manifest, ae_path, anchor_path, optimized_path, patch, out, flags.record_timing);
    else if (*pipe) result = eqopt::cmd_pipeline(eqopt::parse_config(patch), out, flags.record_timing);
    else if (*csi) result = eqopt::cmd_compare_si(manifest, ae_path, anchor_path, patch, out, flags.record_timing);
    else if (*gen_units) result = eqopt::cmd_generalize(eqopt::parse_config(patch), out, flags.record_timing);
    else if (*base)
      result = eqopt::cmd_baseline(method, manifest, ae_path, anchor_path, eqopt::parse_search_objective(objective),
                                   budget, patch, out, flags.record_timing);
    else if (*eye) result = eqopt::cmd_export_eye(manifest, index, optimized_path, out);
    else if (*lat) result = eqopt::cmd_export_latents(manifest, ae_path, out);
    std::cout << result << '\n';
    return 0;
  } catch (const eqopt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return eqopt::exit_code_for(e);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

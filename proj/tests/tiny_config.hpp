#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>

#include <json.hpp>

#include "eqopt/io.hpp"
#include "eqopt/pipeline.hpp"

namespace eqopt::testing {

/// Small enough that every command finishes in seconds.
inline nlohmann::json tiny_patch() {
  return nlohmann::json::parse(R"({
    "data": {"n_x": 300, "n_segments": 600, "stride": 20},
    "autoencoder": {"latent_dim": 4, "hidden": [24, 8], "epochs": 4, "batch": 32},
    "a2c": {"epochs": 3, "hidden": [8, 8], "batch": 16},
    "eval": {"segments": 6, "tuning_segments": 2},
    "ga": {"population": 6, "max_generations": 3},
    "pso": {"particles": 4, "iterations": 3},
    "qlearning": {"max_epochs": 3, "hidden": [8], "batch": 16},
    "ddpg": {"episodes": 6, "batch": 8, "hidden": [8]},
    "compare_si": {"trials": 2},
    "generalize": {"units": 3, "heldout": 1, "segments_per_unit": 500, "eval_segments_per_unit": 4}
  })");
}

inline std::string fresh_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("eqopt_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

/// File name -> contents for every regular file under `dir`.
inline std::map<std::string, std::string> snapshot(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    out[std::filesystem::relative(e.path(), dir).string()] =
        std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return out;
}

/// Every command, chained through files, into `dir`.
inline void run_all(const std::string& dir) {
  const RunConfig cfg = parse_config(tiny_patch());
  const nlohmann::json patch = nlohmann::json::object();
  const std::string m = cmd_gen_data(cfg, join_path(dir, "data"));
  const std::string ae = cmd_train_ae(m, patch, dir);
  const std::string anchor = cmd_anchor(m, ae, patch, dir);
  const std::string agent = cmd_train_a2c(m, ae, anchor, patch, dir);
  const std::string opt = cmd_optimize(m, ae, agent, patch, dir);
  cmd_evaluate(m, ae, anchor, opt, patch, dir, false);
  cmd_compare_si(m, ae, anchor, patch, dir, false);
  for (const char* method : {"ga", "pso", "grid", "qlearn", "ddpg"})
    cmd_baseline(method, m, ae, anchor, SearchObjective::latent, 1e7, patch, dir, false);
  cmd_baseline("pso", m, ae, anchor, SearchObjective::eye, 1e7, patch, dir, false);
  const std::size_t first = read_json_file(opt)["segments"][0]["index"].get<std::size_t>();
  cmd_export_eye(m, first, opt, dir);
  cmd_export_latents(m, ae, dir);
  cmd_pipeline(cfg, join_path(dir, "pipeline"), false);
  cmd_generalize(cfg, join_path(dir, "generalize"), false);
}

}  // namespace eqopt::testing

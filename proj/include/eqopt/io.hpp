#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "eqopt/channel.hpp"
#include "eqopt/config.hpp"

namespace eqopt {

/// Throws DataError when the file is missing or not valid JSON.
nlohmann::json read_json_file(const std::string& path);
/// Two-space indented dump with a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

/// Hash of the config sections an artifact type depends on; the whole
/// config for types without a narrower dependency set.
std::string stage_hash(const RunConfig& cfg, const std::string& type);

/// Header shared by every artifact: type tag, config hash, seed, versions.
nlohmann::json artifact_header(const std::string& type, const RunConfig& cfg);
/// Throws DataError if `j` is not an artifact of `type`.
void check_artifact(const nlohmann::json& j, const std::string& type, const std::string& path);
/// True when `path` holds an artifact of `type` whose stage hash matches `cfg`.
bool artifact_matches(const std::string& path, const std::string& type, const RunConfig& cfg);

/// Plain numeric CSV with a header row.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_bits_csv(const std::string& path, const std::vector<std::uint8_t>& bits);
std::vector<std::uint8_t> read_bits_csv(const std::string& path);

/// Channel configuration with n_bits sized for the requested segment count.
ChannelConfig data_channel(const RunConfig& cfg);
ChannelConfig data_channel(const RunConfig& cfg, const ChannelConfig& base, std::size_t n_segments);

/// Segments and labels from a synthesized pair, truncated to `count`.
Dataset dataset_from_pair(const DataPair& pair, std::size_t n_x, std::size_t stride, std::size_t count,
                          const EyeMask& mask, double swing);

struct LoadedDataset {
  RunConfig config;
  Dataset data;
};

/// Writes input/output waveforms, bits, labels and manifest.json into `dir`.
/// Returns the manifest path.
std::string write_dataset(const std::string& dir, const RunConfig& cfg, const DataPair& pair, const Dataset& ds);
/// Rebuilds segments from the files a manifest lists. Throws DataError when
/// files are missing or disagree with the manifest.
LoadedDataset load_dataset(const std::string& manifest_path);

/// Joins a directory and file name.
std::string join_path(const std::string& dir, const std::string& name);
void ensure_dir(const std::string& dir);

}  // namespace eqopt

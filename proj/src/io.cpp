#include "eqopt/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eqopt/errors.hpp"

namespace eqopt {

using nlohmann::json;
namespace fs = std::filesystem;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError(path + ": invalid JSON");
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

std::string stage_hash(const RunConfig& cfg, const std::string& type) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> stages{
      {"dataset", {"seed", "channel", "data", "mask"}},
      {"autoencoder", {"seed", "channel", "data", "mask", "autoencoder"}},
      {"anchor", {"seed", "channel", "data", "mask", "autoencoder", "anchor"}},
      {"a2c", {"seed", "channel", "data", "mask", "autoencoder", "anchor", "a2c", "equalizer"}},
      {"optimized", {"seed", "channel", "data", "mask", "autoencoder", "anchor", "a2c", "equalizer", "eval"}},
  };
  const json full = to_json(cfg);
  for (const auto& [name, keys] : stages)
    if (name == type) {
      json part = json::object();
      for (const auto& k : keys) part[k] = full[k];
      return config_hash(part);
    }
  return config_hash(full);
}

json artifact_header(const std::string& type, const RunConfig& cfg) {
  return json{{"artifact", type},
              {"config_hash", config_hash(to_json(cfg))},
              {"stage_hash", stage_hash(cfg, type)},
              {"seed", cfg.seed},
              {"versions", {{"eqopt", kVersion}}}};
}

void check_artifact(const json& j, const std::string& type, const std::string& path) {
  if (!j.is_object() || j.value("artifact", std::string{}) != type)
    throw DataError(path + ": expected a '" + type + "' artifact");
}

bool artifact_matches(const std::string& path, const std::string& type, const RunConfig& cfg) {
  if (!fs::exists(path)) return false;
  std::ifstream in(path);
  json j = json::parse(in, nullptr, false);
  return !j.is_discarded() && j.is_object() && j.value("artifact", std::string{}) == type &&
         j.value("stage_hash", std::string{}) == stage_hash(cfg, type);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_double(row[k]);
    out << '\n';
  }
}

void write_bits_csv(const std::string& path, const std::vector<std::uint8_t>& bits) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "symbol,bit\n";
  for (std::size_t k = 0; k < bits.size(); ++k) out << k << ',' << static_cast<int>(bits[k]) << '\n';
}

std::vector<std::uint8_t> read_bits_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "symbol,bit") throw DataError(path + ": expected header symbol,bit");
  std::vector<std::uint8_t> bits;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || std::stoul(line.substr(0, comma)) != bits.size())
      throw DataError(path + ": malformed row '" + line + "'");
    const std::string b = line.substr(comma + 1);
    if (b != "0" && b != "1") throw DataError(path + ": bit must be 0 or 1");
    bits.push_back(b == "1" ? 1 : 0);
  }
  return bits;
}

ChannelConfig data_channel(const RunConfig& cfg, const ChannelConfig& base, std::size_t n_segments) {
  ChannelConfig ch = base;
  ch.n_bits = bits_for_segments(n_segments, cfg.data.n_x, cfg.data.stride, ch.dt, ch.ui);
  return ch;
}

ChannelConfig data_channel(const RunConfig& cfg) { return data_channel(cfg, cfg.channel, cfg.data.n_segments); }

Dataset dataset_from_pair(const DataPair& pair, std::size_t n_x, std::size_t stride, std::size_t count,
                          const EyeMask& mask, double swing) {
  auto outputs = extract_segments(pair.output, n_x, stride);
  auto inputs = extract_segments(pair.input, n_x, stride);
  if (outputs.size() < count || inputs.size() < count)
    throw SegmentationError("waveform yields " + std::to_string(outputs.size()) + " segments, need " +
                            std::to_string(count));
  Dataset ds;
  ds.swing = swing;
  ds.bits = pair.bits;
  ds.items.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ValidityLabel y = label_validity(outputs[k], mask);
    ds.items.push_back(LabeledSegment{std::move(outputs[k]), std::move(inputs[k]), y});
  }
  return ds;
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

std::string write_dataset(const std::string& dir, const RunConfig& cfg, const DataPair& pair, const Dataset& ds) {
  ensure_dir(dir);
  write_waveform_csv(join_path(dir, "waveform_input.csv"), pair.input);
  write_waveform_csv(join_path(dir, "waveform_output.csv"), pair.output);
  write_bits_csv(join_path(dir, "bits.csv"), pair.bits);
  {
    std::ofstream out(join_path(dir, "labels.csv"));
    if (!out) throw DataError("cannot write labels.csv in " + dir);
    out << "index,origin,label\n";
    for (std::size_t k = 0; k < ds.items.size(); ++k)
      out << k << ',' << ds.items[k].output.origin << ',' << ds.items[k].label.y << '\n';
  }
  json m = artifact_header("dataset", cfg);
  m["config"] = to_json(cfg);
  m["files"] = {{"input", "waveform_input.csv"},
                {"output", "waveform_output.csv"},
                {"bits", "bits.csv"},
                {"labels", "labels.csv"}};
  m["n_segments"] = ds.items.size();
  m["n_valid"] = ds.count_valid();
  const std::string path = join_path(dir, "manifest.json");
  write_json_file(path, m);
  return path;
}

LoadedDataset load_dataset(const std::string& manifest_path) {
  const json m = read_json_file(manifest_path);
  check_artifact(m, "dataset", manifest_path);
  LoadedDataset out{parse_config(m.at("config")), {}};
  const RunConfig& cfg = out.config;
  const fs::path dir = fs::path(manifest_path).parent_path();
  auto file = [&](const char* key) {
    if (!m.contains("files") || !m["files"].contains(key)) throw DataError(manifest_path + ": missing files." + key);
    return (dir / m["files"][key].get<std::string>()).string();
  };

  DataPair pair;
  pair.input = read_waveform_csv(file("input"), cfg.channel.ui);
  pair.output = read_waveform_csv(file("output"), cfg.channel.ui);
  pair.bits = read_bits_csv(file("bits"));
  if (pair.input.size() != pair.output.size()) throw DataError(manifest_path + ": input/output length mismatch");
  const std::size_t count = m.at("n_segments").get<std::size_t>();
  out.data = dataset_from_pair(pair, cfg.data.n_x, cfg.data.stride, count, cfg.mask, cfg.channel.swing);

  std::ifstream in(file("labels"));
  std::string line;
  if (!in || !std::getline(in, line) || line != "index,origin,label") throw DataError(manifest_path + ": bad labels file");
  std::size_t k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string idx, origin, label;
    std::getline(row, idx, ',');
    std::getline(row, origin, ',');
    std::getline(row, label, ',');
    if (k >= count || std::stoul(idx) != k || (label != "0" && label != "1"))
      throw DataError(manifest_path + ": malformed label row '" + line + "'");
    out.data.items[k].label.y = label == "1" ? 1 : 0;
    ++k;
  }
  if (k != count) throw DataError(manifest_path + ": label count does not match n_segments");
  return out;
}

}  // namespace eqopt

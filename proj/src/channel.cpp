#include "eqopt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "eqopt/errors.hpp"

namespace eqopt {

ChannelConfig ChannelConfig::stressed(std::uint64_t seed) {
  ChannelConfig cfg;
  cfg.seed = seed;
  return cfg;
}

ChannelConfig ChannelConfig::identity(std::uint64_t seed) {
  ChannelConfig cfg;
  cfg.seed = seed;
  cfg.isi_taps.clear();
  cfg.lp_pole_ghz.reset();
  cfg.noise_sigma = 0.0;
  cfg.rx_phase_ps = 0.0;
  return cfg;
}

void validate(const ChannelConfig& cfg) {
  if (!(cfg.swing > 0.0)) throw ConfigError("channel swing must be positive");
  if (!(cfg.noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (!std::isfinite(cfg.main_cursor)) throw ConfigError("main cursor must be finite");
  for (double t : cfg.isi_taps)
    if (!std::isfinite(t)) throw ConfigError("ISI taps must be finite");
  if (cfg.lp_pole_ghz && !(*cfg.lp_pole_ghz > 0.0)) throw ConfigError("low-pass pole must be positive");
  if (cfg.n_bits == 0) throw ConfigError("n_bits must be at least 1");
  if (!(cfg.dt > 0.0) || !(cfg.ui > 0.0)) throw ConfigError("dt and ui must be positive");
  if (!(cfg.rx_phase_ps >= 0.0) || cfg.rx_phase_ps > cfg.ui) throw ConfigError("rx phase must lie in [0, ui]");
}

std::size_t Dataset::count_valid() const {
  std::size_t n = 0;
  for (const auto& item : items) n += item.label.valid() ? 1 : 0;
  return n;
}

std::vector<std::uint8_t> generate_bits(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("bit count must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return bits;
}

std::size_t symbol_at(double t, double ui) {
  return static_cast<std::size_t>(std::floor(t / ui + 1e-12));
}

DataPair synthesize_pair(const ChannelConfig& cfg) {
  validate(cfg);
  const auto shift = static_cast<std::size_t>(std::round(cfg.rx_phase_ps / cfg.dt));
  const auto n_samples =
      static_cast<std::size_t>(std::floor(static_cast<double>(cfg.n_bits) * cfg.ui / cfg.dt + 1e-9));
  // Symbols needed to render the advanced output tail.
  const std::size_t n_sym =
      std::max(cfg.n_bits, symbol_at(static_cast<double>(n_samples + shift) * cfg.dt, cfg.ui) + 1);

  DataPair pair;
  const auto all_bits = generate_bits(n_sym, cfg.seed);
  pair.bits.assign(all_bits.begin(), all_bits.begin() + static_cast<std::ptrdiff_t>(cfg.n_bits));

  std::vector<double> sym(n_sym), received(n_sym);
  for (std::size_t n = 0; n < n_sym; ++n) sym[n] = all_bits[n] ? 1.0 : -1.0;
  for (std::size_t n = 0; n < n_sym; ++n) {
    double acc = cfg.main_cursor * sym[n];
    for (std::size_t i = 0; i < cfg.isi_taps.size() && i < n; ++i) acc += cfg.isi_taps[i] * sym[n - 1 - i];
    received[n] = acc;
  }

  auto render = [&](const std::vector<double>& levels, std::size_t count) {
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k)
      v[k] = cfg.swing * levels[std::min(symbol_at(static_cast<double>(k) * cfg.dt, cfg.ui), n_sym - 1)];
    return v;
  };
  pair.input = Waveform{render(sym, n_samples), cfg.dt, cfg.ui};
  std::vector<double> rx = render(received, n_samples + shift);

  if (cfg.lp_pole_ghz) {
    const double alpha = std::exp(-2.0 * std::numbers::pi * *cfg.lp_pole_ghz * 1e9 * cfg.dt * 1e-12);
    double state = rx.empty() ? 0.0 : rx[0];
    for (double& v : rx) {
      state = alpha * state + (1.0 - alpha) * v;
      v = state;
    }
  }
  pair.output = Waveform{std::vector<double>(rx.begin() + static_cast<std::ptrdiff_t>(shift), rx.end()), cfg.dt,
                         cfg.ui};

  if (cfg.noise_sigma > 0.0) {
    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    for (double& v : pair.output.samples) v += noise(rng);
  }
  return pair;
}

std::size_t bits_for_segments(std::size_t count, std::size_t n_x, std::size_t stride, double dt, double ui) {
  const std::size_t samples = (count == 0 ? 0 : (count - 1) * stride) + n_x;
  return static_cast<std::size_t>(std::ceil(static_cast<double>(samples) * dt / ui)) + 1;
}

Dataset build_dataset(const ChannelConfig& cfg, std::size_t n_x, std::size_t stride, const EyeMask& mask) {
  validate(mask, cfg.ui);
  DataPair pair = synthesize_pair(cfg);
  auto outputs = extract_segments(pair.output, n_x, stride);
  auto inputs = extract_segments(pair.input, n_x, stride);

  Dataset ds;
  ds.swing = cfg.swing;
  ds.items.reserve(outputs.size());
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    ValidityLabel y = label_validity(outputs[k], mask);
    ds.items.push_back(LabeledSegment{std::move(outputs[k]), std::move(inputs[k]), y});
  }
  ds.bits = std::move(pair.bits);
  return ds;
}

}  // namespace eqopt

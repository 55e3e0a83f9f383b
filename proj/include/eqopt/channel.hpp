#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eqopt/signal.hpp"

namespace eqopt {

/// Synthetic link: symbol-spaced FIR (main cursor + post-cursors), first-order
/// low-pass on the sample grid, then additive white Gaussian noise.
struct ChannelConfig {
  std::uint64_t seed = 1;
  double swing = 400.0;                          // mV, half of the NRZ level spacing
  double main_cursor = 1.0;
  std::vector<double> isi_taps{0.35, 0.18, 0.08};  // post-cursors, symbol-spaced
  std::optional<double> lp_pole_ghz = 4.0;       // nullopt disables the low-pass
  double noise_sigma = 8.0;                      // mV
  std::size_t n_bits = 4096;
  double dt = 10.0;                              // ps
  double ui = 156.3;                             // ps
  /// Receiver sampling-phase offset: the output is advanced by
  /// round(rx_phase_ps / dt) samples relative to the transmitted symbols.
  double rx_phase_ps = 60.0;

  /// The stressed default: taps (0.35, 0.18, 0.08), 4 GHz pole, 8 mV noise.
  static ChannelConfig stressed(std::uint64_t seed = 1);
  /// Pass-through channel with no ISI, filtering or noise.
  static ChannelConfig identity(std::uint64_t seed = 1);
};

void validate(const ChannelConfig& cfg);

struct DataPair {
  Waveform input;   // ideal NRZ at +/- swing
  Waveform output;  // channel-degraded
  std::vector<std::uint8_t> bits;
};

/// A labeled slice of the channel output together with the matching slice of
/// the ideal input.
struct LabeledSegment {
  Segment output;
  Segment input;
  ValidityLabel label;
};

struct Dataset {
  std::vector<LabeledSegment> items;
  std::vector<std::uint8_t> bits;  // transmitted symbols of the source pair
  double swing = 400.0;

  std::size_t count_valid() const;
};

std::vector<std::uint8_t> generate_bits(std::size_t n, std::uint64_t seed);

/// Index of the symbol containing absolute time t (ps).
std::size_t symbol_at(double t, double ui);

DataPair synthesize_pair(const ChannelConfig& cfg);

/// Bits needed so that `count` segments of length n_x at `stride` fit.
std::size_t bits_for_segments(std::size_t count, std::size_t n_x, std::size_t stride, double dt, double ui);

Dataset build_dataset(const ChannelConfig& cfg, std::size_t n_x, std::size_t stride, const EyeMask& mask);

}  // namespace eqopt

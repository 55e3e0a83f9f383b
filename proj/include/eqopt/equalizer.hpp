#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqopt/signal.hpp"

namespace eqopt {

enum class EqualizerKind { dfe, ctle_dfe };

/// Action dimension: 4 for DFE only, 8 for CTLE followed by DFE.
std::size_t action_dim(EqualizerKind kind) noexcept;
std::string to_string(EqualizerKind kind);
EqualizerKind parse_equalizer_kind(const std::string& s);

/// Four feedback taps, each clipped to [0, 1].
struct DfeParams {
  std::array<double, 4> taps{0.0, 0.0, 0.0, 0.0};
  /// Amplitude that scales each hard decision. nullopt: estimate from the
  /// signal as the mean |UI-center sample|. Set to 1 for unit decisions.
  std::optional<double> swing_est;
};

/// G_dc dimensionless, f_z and f_p in GHz, G_p in dB.
struct CtleParams {
  double g_dc = 1.0;
  double f_z = 1.0;
  double f_p = 1.0;
  double g_p = 0.0;
};

/// Frequencies below this are clamped (GHz); keeps H(s) finite when f_z = 0.
inline constexpr double kCtleFrequencyFloorGhz = 1e-3;

struct ParamRange {
  double low;
  double high;
};

/// Physical bounds per action dimension.
struct ParamRanges {
  std::vector<ParamRange> dims;

  std::size_t size() const noexcept { return dims.size(); }
  static ParamRanges for_kind(EqualizerKind kind);
};

void validate(const ParamRanges& r);

struct MappedParams {
  std::vector<double> physical;
  bool clipped = false;  // some action component was outside [0, 1]
};

/// p_i = low_i + a_i (high_i - low_i), after clipping a to [0, 1].
MappedParams map_action(std::span<const double> action, const ParamRanges& ranges);
/// Inverse of map_action on the box.
std::vector<double> unmap_params(std::span<const double> physical, const ParamRanges& ranges);

/// Full parameter set for either kind.
struct EqualizerSetting {
  std::optional<CtleParams> ctle;
  DfeParams dfe;
};

/// Interprets a physical parameter vector laid out as {t1..t4} or
/// {G_dc, f_z, f_p, G_p, t1..t4}.
EqualizerSetting setting_from_physical(EqualizerKind kind, std::span<const double> physical);

/// Index of the UI-center sample of symbol n in a signal starting at absolute
/// time t0, or nullopt if it falls outside [0, len).
std::optional<std::size_t> ui_center_index(std::size_t n, double t0, double dt, double ui, std::size_t len);

/// Mean |v| over UI-center samples; 0 if there are none.
double estimate_swing(std::span<const double> v, double t0, double dt, double ui);

/// y[n] = r[n] - sum_i t_i * swing_est * s[n-i], symbol-spaced, decisions
/// sliced at 0 mV on the equalized UI-center sample; history starts at +1.
Segment apply_dfe(const Segment& sig, const DfeParams& p);

struct CtleCoeffs {
  double b0;
  double b1;
  double a1;
  bool clamped = false;  // f_z or f_p was raised to the frequency floor
};

/// Bilinear discretization (T = dt) of
/// H(s) = G_dc (s + w_z') / (s + w_p) * (w_p / w_z'), w_z' = w_z 10^(-G_p/20).
CtleCoeffs ctle_coeffs(const CtleParams& p, double dt_ps);

/// y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1] from zero state.
Segment apply_ctle(const Segment& sig, const CtleParams& p);

/// CTLE (if present) then DFE.
Segment apply_chain(const Segment& sig, const std::optional<CtleParams>& ctle, const DfeParams& dfe);
Segment apply_chain(const Segment& sig, const EqualizerSetting& setting);

}  // namespace eqopt

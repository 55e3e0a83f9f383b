#include "eqopt/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eqopt/channel.hpp"
#include "eqopt/errors.hpp"

namespace eqopt {

std::size_t action_dim(EqualizerKind kind) noexcept { return kind == EqualizerKind::dfe ? 4 : 8; }

std::string to_string(EqualizerKind kind) { return kind == EqualizerKind::dfe ? "dfe" : "ctle-dfe"; }

EqualizerKind parse_equalizer_kind(const std::string& s) {
  if (s == "dfe") return EqualizerKind::dfe;
  if (s == "ctle-dfe" || s == "ctle_dfe") return EqualizerKind::ctle_dfe;
  throw ConfigError("unknown equalizer kind '" + s + "' (expected dfe or ctle-dfe)");
}

ParamRanges ParamRanges::for_kind(EqualizerKind kind) {
  ParamRanges r;
  if (kind == EqualizerKind::ctle_dfe) r.dims = {{0.0, 10.0}, {0.0, 1.0}, {0.0, 10.0}, {0.0, 20.0}};
  for (int i = 0; i < 4; ++i) r.dims.push_back({0.0, 1.0});
  return r;
}

void validate(const ParamRanges& r) {
  for (const auto& d : r.dims)
    if (!(d.low < d.high)) throw ConfigError("parameter range requires low < high");
}

MappedParams map_action(std::span<const double> action, const ParamRanges& ranges) {
  if (action.size() != ranges.size())
    throw ShapeError("action has " + std::to_string(action.size()) + " components, ranges have " +
                     std::to_string(ranges.size()));
  MappedParams out;
  out.physical.resize(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    double a = action[i];
    if (!(a >= 0.0 && a <= 1.0)) {
      out.clipped = true;
      a = std::isnan(a) ? 0.0 : std::clamp(a, 0.0, 1.0);
    }
    const auto& d = ranges.dims[i];
    out.physical[i] = d.low + a * (d.high - d.low);
  }
  return out;
}

std::vector<double> unmap_params(std::span<const double> physical, const ParamRanges& ranges) {
  if (physical.size() != ranges.size()) throw ShapeError("parameter vector does not match ranges");
  std::vector<double> a(physical.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& d = ranges.dims[i];
    a[i] = (physical[i] - d.low) / (d.high - d.low);
  }
  return a;
}

EqualizerSetting setting_from_physical(EqualizerKind kind, std::span<const double> p) {
  if (p.size() != action_dim(kind)) throw ShapeError("parameter vector length does not match equalizer kind");
  EqualizerSetting s;
  std::size_t off = 0;
  if (kind == EqualizerKind::ctle_dfe) {
    s.ctle = CtleParams{p[0], p[1], p[2], p[3]};
    off = 4;
  }
  for (std::size_t i = 0; i < 4; ++i) s.dfe.taps[i] = std::clamp(p[off + i], 0.0, 1.0);
  return s;
}

std::optional<std::size_t> ui_center_index(std::size_t n, double t0, double dt, double ui, std::size_t len) {
  const double tc = (static_cast<double>(n) + 0.5) * ui;
  const double k = std::round((tc - t0) / dt);
  if (k < 0.0 || k >= static_cast<double>(len)) return std::nullopt;
  return static_cast<std::size_t>(k);
}

double estimate_swing(std::span<const double> v, double t0, double dt, double ui) {
  if (v.empty()) return 0.0;
  const std::size_t n0 = symbol_at(t0, ui);
  const std::size_t n1 = symbol_at(t0 + static_cast<double>(v.size() - 1) * dt, ui);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = n0; n <= n1; ++n) {
    if (auto k = ui_center_index(n, t0, dt, ui, v.size())) {
      sum += std::abs(v[*k]);
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

namespace {

void require_finite(const Segment& sig) {
  for (double v : sig.data)
    if (!std::isfinite(v)) throw SignalError("equalizer input contains a non-finite sample");
}

}  // namespace

Segment apply_dfe(const Segment& sig, const DfeParams& p) {
  require_finite(sig);
  Segment out = sig;
  if (sig.data.empty() || std::all_of(p.taps.begin(), p.taps.end(), [](double t) { return t == 0.0; }))
    return out;

  const double t0 = sig.start_time();
  const double swing = p.swing_est ? *p.swing_est : estimate_swing(sig.data, t0, sig.dt, sig.ui);
  std::array<double, 4> taps{};
  for (std::size_t i = 0; i < 4; ++i) taps[i] = std::clamp(p.taps[i], 0.0, 1.0) * swing;

  const std::size_t len = sig.size();
  const std::size_t n0 = symbol_at(t0, sig.ui);
  const std::size_t n_last = symbol_at(t0 + static_cast<double>(len - 1) * sig.dt, sig.ui);
  std::vector<double> decisions(n_last - n0 + 1, 1.0);
  auto decision = [&](std::size_t n, std::size_t back) {
    return n >= n0 + back ? decisions[n - back - n0] : 1.0;
  };

  std::size_t current = n0;
  double feedback = 0.0;
  std::optional<std::size_t> center = ui_center_index(current, t0, sig.dt, sig.ui, len);
  auto refresh = [&](std::size_t n) {
    feedback = 0.0;
    for (std::size_t i = 0; i < 4; ++i) feedback += taps[i] * decision(n, i + 1);
    center = ui_center_index(n, t0, sig.dt, sig.ui, len);
  };
  refresh(current);

  for (std::size_t k = 0; k < len; ++k) {
    const std::size_t n = symbol_at(t0 + static_cast<double>(k) * sig.dt, sig.ui);
    if (n != current) {
      current = n;
      refresh(current);
    }
    out.data[k] = sig.data[k] - feedback;
    if (center && *center == k) decisions[current - n0] = out.data[k] >= 0.0 ? 1.0 : -1.0;
  }
  return out;
}

CtleCoeffs ctle_coeffs(const CtleParams& p, double dt_ps) {
  if (!(dt_ps > 0.0)) throw ParameterError("CTLE sample period must be positive");
  CtleCoeffs c{};
  double f_z = p.f_z, f_p = p.f_p;
  if (!(f_z >= kCtleFrequencyFloorGhz)) {
    f_z = kCtleFrequencyFloorGhz;
    c.clamped = true;
  }
  if (!(f_p >= kCtleFrequencyFloorGhz)) {
    f_p = kCtleFrequencyFloorGhz;
    c.clamped = true;
  }
  const double two_pi = 2.0 * std::numbers::pi;
  const double w_z = two_pi * f_z * 1e9 * std::pow(10.0, -p.g_p / 20.0);
  const double w_p = two_pi * f_p * 1e9;
  const double k = 2.0 / (dt_ps * 1e-12);
  const double gain = p.g_dc * w_p / w_z;
  const double den = k + w_p;
  c.b0 = gain * (k + w_z) / den;
  c.b1 = gain * (w_z - k) / den;
  c.a1 = (w_p - k) / den;
  return c;
}

Segment apply_ctle(const Segment& sig, const CtleParams& p) {
  require_finite(sig);
  const CtleCoeffs c = ctle_coeffs(p, sig.dt);
  Segment out = sig;
  double x_prev = 0.0, y_prev = 0.0;
  for (std::size_t k = 0; k < sig.size(); ++k) {
    const double x = sig.data[k];
    const double y = c.b0 * x + c.b1 * x_prev - c.a1 * y_prev;
    out.data[k] = y;
    x_prev = x;
    y_prev = y;
  }
  return out;
}

Segment apply_chain(const Segment& sig, const std::optional<CtleParams>& ctle, const DfeParams& dfe) {
  if (!ctle) return apply_dfe(sig, dfe);
  return apply_dfe(apply_ctle(sig, *ctle), dfe);
}

Segment apply_chain(const Segment& sig, const EqualizerSetting& setting) {
  return apply_chain(sig, setting.ctle, setting.dfe);
}

}  // namespace eqopt

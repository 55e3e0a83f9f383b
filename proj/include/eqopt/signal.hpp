#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace eqopt {

/// Sampled voltage trace. Samples are in mV; dt and ui in ps.
struct Waveform {
  std::vector<double> samples;
  double dt = 10.0;
  double ui = 156.3;

  std::size_t size() const noexcept { return samples.size(); }
};

/// Fixed-length slice of a waveform. `origin` is the index of data[0] in the
/// source waveform, which fixes the absolute time and so the fold phase.
struct Segment {
  std::vector<double> data;
  std::size_t origin = 0;
  double dt = 10.0;
  double ui = 156.3;

  std::size_t size() const noexcept { return data.size(); }
  double start_time() const noexcept { return static_cast<double>(origin) * dt; }
};

/// Rectangular keep-out region of the eye: width in ps, height in mV.
struct EyeMask {
  double width = 35.0;
  double height = 80.0;
  double center_t = 156.3 / 2.0;
  double center_v = 0.0;

  /// Centered mask for a given unit interval.
  static EyeMask centered(double ui, double width = 35.0, double height = 80.0);
};

/// 0 invalid (trace intersects the mask), 1 valid.
struct ValidityLabel {
  int y = 1;
  bool valid() const noexcept { return y == 1; }
};

/// Throws SignalError if `w` violates its invariants.
void validate(const Waveform& w);
/// Throws ParameterError if the mask is degenerate or does not fit in one UI.
void validate(const EyeMask& mask, double ui);

Waveform to_waveform(const Segment& s);

/// Rolling-window slices of length n_x, one every `stride` samples.
std::vector<Segment> extract_segments(const Waveform& w, std::size_t n_x, std::size_t stride);

/// Linear resampling onto a grid of spacing target_dt starting at t = 0.
Waveform interpolate(const Waveform& w, double target_dt);

/// One piece of the folded trace restricted to a single 1 ps eye column:
/// the trace covers every voltage in [v_lo, v_hi] within column `col`.
struct TraceSpan {
  std::size_t col;
  double v_lo;
  double v_hi;
};

/// Number of 1 ps columns spanning one UI.
std::size_t eye_columns(double ui);

/// Interpolates `s` to 1 ps, folds it modulo the UI using absolute time
/// (origin * dt + offset), and reports the column-wise pieces of the piecewise
/// linear trace in time order.
void walk_folded_trace(const Segment& s, const std::function<void(const TraceSpan&)>& visit);

/// Cell footprint of a mask on the 1 ps x 1 mV eye grid: every cell whose
/// interior meets the open mask rectangle. Rows are absolute integer mV bins.
struct MaskFootprint {
  std::size_t col_lo, col_hi;  // inclusive
  long row_lo, row_hi;         // inclusive, floor(v) bins
};
MaskFootprint mask_footprint(const EyeMask& mask, double ui);

/// y = 0 iff the folded trace enters the mask footprint.
ValidityLabel label_validity(const Segment& s, const EyeMask& mask);

// Waveform CSV: header `t_ps,v_mV`, one row per sample.
void write_waveform_csv(const std::string& path, const Waveform& w);
/// `ui` is not stored in the CSV; the caller supplies it (from the manifest).
Waveform read_waveform_csv(const std::string& path, double ui);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace eqopt

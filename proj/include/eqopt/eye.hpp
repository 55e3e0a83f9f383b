#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqopt/signal.hpp"

namespace eqopt {

/// Voltage extent of the eye grid. Bounds are whole mV so rows line up with
/// absolute 1 mV bins.
struct EyeGeometry {
  double v_min = -500.0;
  double v_max = 500.0;

  /// [-1.25 swing, +1.25 swing], widened outward to whole mV.
  static EyeGeometry for_swing(double swing);
};

/// Occupancy on a 1 ps x 1 mV grid. Row r covers [v_min + r, v_min + r + 1);
/// column c covers phase [c, c + 1) within the UI (the last one is clipped at ui).
struct EyeDiagram {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double v_min = 0.0;
  double v_max = 0.0;
  double ui = 0.0;
  std::vector<std::uint8_t> cells;  // row-major, 1 = occupied

  EyeDiagram() = default;
  EyeDiagram(std::size_t rows, std::size_t cols, double v_min, double ui);

  bool occupied(std::size_t r, std::size_t c) const { return cells[r * cols + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { cells[r * cols + c] = v ? 1 : 0; }
  std::size_t center_row() const;
  std::size_t center_col() const;
  /// Time width of column c (1 ps except possibly the last).
  double col_width(std::size_t c) const;
  std::size_t occupied_count() const;
};

/// Axis-aligned rectangle in cell indices plus its physical bounds.
struct EyeWindow {
  double t0 = 0.0, t1 = 0.0;  // ps
  double v0 = 0.0, v1 = 0.0;  // mV
  double area = 0.0;          // mV * ps
  std::size_t col_lo = 0, col_hi = 0;  // inclusive; meaningful when area > 0
  std::size_t row_lo = 0, row_hi = 0;

  bool closed() const noexcept { return area <= 0.0; }
};

EyeDiagram fold_eye(const Segment& s, const EyeGeometry& geom);

/// Physical window covering cells [col_lo, col_hi] x [row_lo, row_hi].
EyeWindow make_window(const EyeDiagram& eye, std::size_t col_lo, std::size_t col_hi, std::size_t row_lo,
                      std::size_t row_hi);

/// Largest empty rectangle containing the center cell. Ties prefer the wider
/// window, then lower t0, then lower v0. A closed eye yields area 0.
EyeWindow largest_window(const EyeDiagram& eye);

/// Area of the largest eye-opening window of a segment.
double eye_area(const Segment& s, const EyeGeometry& geom);

/// 100 (after - before) / before. Throws MetricUndefined when before <= 0.
double window_improvement(double before, double after);

void write_eye_csv(const std::string& path, const EyeDiagram& eye);
/// SVG rendering of the occupancy grid with the window and (optionally) a mask.
std::string render_eye_svg(const EyeDiagram& eye, const EyeWindow& window, const std::optional<EyeMask>& mask);

}  // namespace eqopt

#include "eqopt/eye.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eqopt/errors.hpp"

namespace eqopt {

EyeGeometry EyeGeometry::for_swing(double swing) {
  if (!(swing > 0.0)) throw ParameterError("eye geometry needs a positive swing");
  return EyeGeometry{std::floor(-1.25 * swing), std::ceil(1.25 * swing)};
}

EyeDiagram::EyeDiagram(std::size_t rows_, std::size_t cols_, double v_min_, double ui_)
    : rows(rows_), cols(cols_), v_min(v_min_), v_max(v_min_ + static_cast<double>(rows_)), ui(ui_),
      cells(rows_ * cols_, 0) {}

std::size_t EyeDiagram::center_row() const {
  const double r = std::floor(0.0 - v_min);
  return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(rows - 1)));
}

std::size_t EyeDiagram::center_col() const {
  return std::min(static_cast<std::size_t>(std::floor(ui / 2.0)), cols - 1);
}

double EyeDiagram::col_width(std::size_t c) const {
  return std::min(static_cast<double>(c + 1), ui) - static_cast<double>(c);
}

std::size_t EyeDiagram::occupied_count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

EyeDiagram fold_eye(const Segment& s, const EyeGeometry& geom) {
  if (s.data.empty()) throw SegmentationError("cannot fold an empty segment");
  if (!(geom.v_max > geom.v_min)) throw ParameterError("eye geometry requires v_max > v_min");
  const auto rows = static_cast<std::size_t>(std::ceil(geom.v_max - geom.v_min));
  EyeDiagram eye(rows, eye_columns(s.ui), geom.v_min, s.ui);
  eye.v_max = geom.v_max;

  const double top = static_cast<double>(rows) - 1e-9;
  auto row_of = [&](double v) {
    const double r = std::clamp(v - geom.v_min, 0.0, top);
    return static_cast<std::size_t>(r);
  };
  walk_folded_trace(s, [&](const TraceSpan& span) {
    const std::size_t r0 = row_of(span.v_lo);
    const std::size_t r1 = row_of(span.v_hi);
    for (std::size_t r = r0; r <= r1; ++r) eye.cells[r * eye.cols + span.col] = 1;
  });
  return eye;
}

EyeWindow make_window(const EyeDiagram& eye, std::size_t col_lo, std::size_t col_hi, std::size_t row_lo,
                      std::size_t row_hi) {
  EyeWindow w;
  w.col_lo = col_lo;
  w.col_hi = col_hi;
  w.row_lo = row_lo;
  w.row_hi = row_hi;
  w.t0 = static_cast<double>(col_lo);
  w.t1 = std::min(static_cast<double>(col_hi + 1), eye.ui);
  w.v0 = eye.v_min + static_cast<double>(row_lo);
  w.v1 = eye.v_min + static_cast<double>(row_hi + 1);
  w.area = (w.t1 - w.t0) * (w.v1 - w.v0);
  return w;
}

EyeWindow largest_window(const EyeDiagram& eye) {
  if (eye.rows == 0 || eye.cols == 0) return EyeWindow{};
  const std::size_t cr = eye.center_row();
  const std::size_t cc = eye.center_col();
  if (eye.occupied(cr, cc)) return EyeWindow{};

  // Empty run lengths through the center row, each counting the center cell.
  std::vector<std::size_t> up(eye.cols, 0), down(eye.cols, 0);
  for (std::size_t c = 0; c < eye.cols; ++c) {
    std::size_t r = cr;
    while (r < eye.rows && !eye.occupied(r, c)) ++r;
    up[c] = r - cr;
    if (up[c] == 0) continue;
    std::size_t d = 0;
    while (d <= cr && !eye.occupied(cr - d, c)) ++d;
    down[c] = d;
  }

  // Running minima outward from the center column.
  std::size_t a_min = cc;
  std::vector<std::size_t> lu(eye.cols), ld(eye.cols), ru(eye.cols), rd(eye.cols);
  {
    std::size_t u = up[cc], d = down[cc];
    for (std::size_t a = cc + 1; a-- > 0;) {
      u = std::min(u, up[a]);
      d = std::min(d, down[a]);
      if (u == 0) break;
      lu[a] = u;
      ld[a] = d;
      a_min = a;
    }
  }
  std::size_t b_max = cc;
  {
    std::size_t u = up[cc], d = down[cc];
    for (std::size_t b = cc; b < eye.cols; ++b) {
      u = std::min(u, up[b]);
      d = std::min(d, down[b]);
      if (u == 0) break;
      ru[b] = u;
      rd[b] = d;
      b_max = b;
    }
  }

  double best_area = -1.0, best_width = 0.0;
  std::size_t best_a = 0, best_b = 0, best_lo = 0, best_hi = 0;
  for (std::size_t a = a_min; a <= cc; ++a) {
    for (std::size_t b = cc; b <= b_max; ++b) {
      const std::size_t u = std::min(lu[a], ru[b]);
      const std::size_t d = std::min(ld[a], rd[b]);
      const double width = std::min(static_cast<double>(b + 1), eye.ui) - static_cast<double>(a);
      const double area = width * static_cast<double>(u + d - 1);
      const std::size_t lo = cr + 1 - d;
      bool better = area > best_area;
      if (!better && area == best_area) {
        if (width != best_width)
          better = width > best_width;
        else if (a != best_a)
          better = a < best_a;
        else
          better = lo < best_lo;
      }
      if (better) {
        best_area = area;
        best_width = width;
        best_a = a;
        best_b = b;
        best_lo = lo;
        best_hi = cr + u - 1;
      }
    }
  }
  return make_window(eye, best_a, best_b, best_lo, best_hi);
}

double eye_area(const Segment& s, const EyeGeometry& geom) { return largest_window(fold_eye(s, geom)).area; }

double window_improvement(double before, double after) {
  if (!(before > 0.0)) throw MetricUndefined("window improvement is undefined for a closed reference eye");
  return 100.0 * (after - before) / before;
}

void write_eye_csv(const std::string& path, const EyeDiagram& eye) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "v_mV";
  for (std::size_t c = 0; c < eye.cols; ++c) out << ",t" << c;
  out << '\n';
  for (std::size_t r = eye.rows; r-- > 0;) {
    out << format_double(eye.v_min + static_cast<double>(r));
    for (std::size_t c = 0; c < eye.cols; ++c) out << ',' << (eye.occupied(r, c) ? 1 : 0);
    out << '\n';
  }
}

std::string render_eye_svg(const EyeDiagram& eye, const EyeWindow& window, const std::optional<EyeMask>& mask) {
  constexpr double sx = 4.0;  // px per ps
  constexpr double sy = 0.5;  // px per mV
  const double width = sx * eye.ui;
  const double height = sy * static_cast<double>(eye.rows);
  auto y_of = [&](double v) { return format_double(sy * (eye.v_max - v)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(width) << "\" height=\""
      << format_double(height) << "\" viewBox=\"0 0 " << format_double(width) << ' ' << format_double(height)
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#1f4e9c\">\n";
  for (std::size_t r = 0; r < eye.rows; ++r) {
    std::size_t c = 0;
    while (c < eye.cols) {
      if (!eye.occupied(r, c)) {
        ++c;
        continue;
      }
      std::size_t end = c;
      while (end < eye.cols && eye.occupied(r, end)) ++end;
      const double t1 = std::min(static_cast<double>(end), eye.ui);
      svg << "<rect x=\"" << format_double(sx * static_cast<double>(c)) << "\" y=\""
          << y_of(eye.v_min + static_cast<double>(r + 1)) << "\" width=\""
          << format_double(sx * (t1 - static_cast<double>(c))) << "\" height=\"" << format_double(sy)
          << "\"/>\n";
      c = end;
    }
  }
  svg << "</g>\n";
  if (!window.closed()) {
    svg << "<rect x=\"" << format_double(sx * window.t0) << "\" y=\"" << y_of(window.v1) << "\" width=\""
        << format_double(sx * (window.t1 - window.t0)) << "\" height=\""
        << format_double(sy * (window.v1 - window.v0))
        << "\" fill=\"none\" stroke=\"#2a9d3a\" stroke-width=\"2\"/>\n";
  }
  if (mask) {
    const double t0 = mask->center_t - mask->width / 2.0;
    const double v1 = mask->center_v + mask->height / 2.0;
    svg << "<rect x=\"" << format_double(sx * t0) << "\" y=\"" << y_of(v1) << "\" width=\""
        << format_double(sx * mask->width) << "\" height=\"" << format_double(sy * mask->height)
        << "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace eqopt

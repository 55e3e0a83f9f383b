#include "eqopt/signal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "eqopt/errors.hpp"

namespace eqopt {

EyeMask EyeMask::centered(double ui, double width, double height) {
  return EyeMask{width, height, ui / 2.0, 0.0};
}

void validate(const Waveform& w) {
  if (!(w.dt > 0.0) || !(w.ui > 0.0)) throw SignalError("waveform dt and ui must be positive");
  if (w.samples.empty()) throw SignalError("waveform has no samples");
  for (double v : w.samples)
    if (!std::isfinite(v)) throw SignalError("waveform contains a non-finite sample");
}

void validate(const EyeMask& mask, double ui) {
  if (!(mask.width > 0.0) || mask.width > ui) throw ParameterError("mask width must lie in (0, ui]");
  if (!(mask.height > 0.0)) throw ParameterError("mask height must be positive");
  const double t_lo = mask.center_t - mask.width / 2.0;
  const double t_hi = mask.center_t + mask.width / 2.0;
  if (t_lo < 0.0 || t_hi > ui) throw ParameterError("mask must fit inside one unit interval");
}

Waveform to_waveform(const Segment& s) { return Waveform{s.data, s.dt, s.ui}; }

std::vector<Segment> extract_segments(const Waveform& w, std::size_t n_x, std::size_t stride) {
  if (n_x == 0) throw ParameterError("segment length must be at least 1");
  if (stride == 0) throw ParameterError("stride must be at least 1");
  if (w.size() < n_x)
    throw SegmentationError("waveform of " + std::to_string(w.size()) + " samples is shorter than n_x=" +
                            std::to_string(n_x));
  const std::size_t count = (w.size() - n_x) / stride + 1;
  std::vector<Segment> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const auto first = w.samples.begin() + static_cast<std::ptrdiff_t>(k * stride);
    out.push_back(Segment{{first, first + static_cast<std::ptrdiff_t>(n_x)}, k * stride, w.dt, w.ui});
  }
  return out;
}

Waveform interpolate(const Waveform& w, double target_dt) {
  if (!(target_dt > 0.0)) throw ParameterError("interpolation step must be positive");
  if (target_dt > w.dt) throw ParameterError("interpolation step must not exceed the sample period");
  if (w.samples.empty()) throw SegmentationError("cannot interpolate an empty waveform");
  if (target_dt == w.dt) return w;

  const std::size_t n = w.size();
  const double span = static_cast<double>(n - 1) * w.dt;
  const auto count = static_cast<std::size_t>(std::floor(span / target_dt + 1e-9)) + 1;
  const double ratio = target_dt / w.dt;

  Waveform out{std::vector<double>(count), target_dt, w.ui};
  for (std::size_t j = 0; j < count; ++j) {
    double pos = static_cast<double>(j) * ratio;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-9) pos = nearest;
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= n) {
      out.samples[j] = w.samples[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i);
    out.samples[j] = w.samples[i] + frac * (w.samples[i + 1] - w.samples[i]);
  }
  return out;
}

std::size_t eye_columns(double ui) { return static_cast<std::size_t>(std::ceil(ui - 1e-12)); }

namespace {

// Splits the straight piece (ta, va) -> (tb, vb), ta < tb in absolute ps,
// at every folded column boundary.
void walk_piece(double ta, double va, double tb, double vb, double ui, std::size_t ncols,
                const std::function<void(const TraceSpan&)>& visit) {
  const double slope = (vb - va) / (tb - ta);
  double t = ta;
  while (tb - t > 1e-9) {
    const double m = std::floor(t / ui);
    double phase = t - m * ui;
    if (phase < 0.0) phase = 0.0;
    auto col = static_cast<std::size_t>(std::floor(phase));
    if (col >= ncols) col = ncols - 1;
    const double boundary = std::min(static_cast<double>(col + 1), ui);
    double t_end = std::min(tb, m * ui + boundary);
    if (t_end - t <= 1e-9) {
      // Rounding put t on a boundary; the remaining sliver belongs to the next column.
      t = std::min(tb, t + 1e-9);
      continue;
    }
    const double v0 = va + slope * (t - ta);
    const double v1 = va + slope * (t_end - ta);
    visit(TraceSpan{col, std::min(v0, v1), std::max(v0, v1)});
    t = t_end;
  }
}

}  // namespace

void walk_folded_trace(const Segment& s, const std::function<void(const TraceSpan&)>& visit) {
  if (s.data.empty()) throw SegmentationError("cannot fold an empty segment");
  const Waveform raw = to_waveform(s);
  const Waveform fine = s.dt > 1.0 ? interpolate(raw, 1.0) : raw;
  const std::size_t ncols = eye_columns(s.ui);
  const double t0 = s.start_time();

  if (fine.size() == 1) {
    const double phase = std::fmod(t0, s.ui);
    const auto col = std::min(static_cast<std::size_t>(std::floor(phase)), ncols - 1);
    visit(TraceSpan{col, fine.samples[0], fine.samples[0]});
    return;
  }
  for (std::size_t j = 0; j + 1 < fine.size(); ++j) {
    const double ta = t0 + static_cast<double>(j) * fine.dt;
    const double tb = t0 + static_cast<double>(j + 1) * fine.dt;
    walk_piece(ta, fine.samples[j], tb, fine.samples[j + 1], s.ui, ncols, visit);
  }
}

MaskFootprint mask_footprint(const EyeMask& mask, double ui) {
  validate(mask, ui);
  const double t_lo = mask.center_t - mask.width / 2.0;
  const double t_hi = mask.center_t + mask.width / 2.0;
  const double v_lo = mask.center_v - mask.height / 2.0;
  const double v_hi = mask.center_v + mask.height / 2.0;
  const std::size_t ncols = eye_columns(ui);
  MaskFootprint fp{};
  fp.col_lo = static_cast<std::size_t>(std::floor(t_lo));
  fp.col_hi = std::min(static_cast<std::size_t>(std::ceil(t_hi)) - 1, ncols - 1);
  fp.row_lo = static_cast<long>(std::floor(v_lo));
  fp.row_hi = static_cast<long>(std::ceil(v_hi)) - 1;
  return fp;
}

ValidityLabel label_validity(const Segment& s, const EyeMask& mask) {
  if (s.data.empty()) throw SegmentationError("cannot label an empty segment");
  const MaskFootprint fp = mask_footprint(mask, s.ui);
  bool hit = false;
  walk_folded_trace(s, [&](const TraceSpan& span) {
    if (hit || span.col < fp.col_lo || span.col > fp.col_hi) return;
    const auto r_lo = static_cast<long>(std::floor(span.v_lo));
    const auto r_hi = static_cast<long>(std::floor(span.v_hi));
    if (r_lo <= fp.row_hi && r_hi >= fp.row_lo) hit = true;
  });
  return ValidityLabel{hit ? 0 : 1};
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_waveform_csv(const std::string& path, const Waveform& w) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << "t_ps,v_mV\n";
  for (std::size_t k = 0; k < w.size(); ++k)
    out << format_double(static_cast<double>(k) * w.dt) << ',' << format_double(w.samples[k]) << '\n';
}

Waveform read_waveform_csv(const std::string& path, double ui) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t_ps,v_mV", 0) != 0)
    throw DataError(path + ": expected header t_ps,v_mV");
  std::vector<double> times, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError(path + ": malformed row '" + line + "'");
    double t = 0.0, v = 0.0;
    const char* b = line.data();
    if (std::from_chars(b, b + comma, t).ec != std::errc{} ||
        std::from_chars(b + comma + 1, b + line.size(), v).ec != std::errc{})
      throw DataError(path + ": malformed row '" + line + "'");
    if (!times.empty() && !(t > times.back())) throw DataError(path + ": time column is not increasing");
    times.push_back(t);
    values.push_back(v);
  }
  if (values.empty()) throw DataError(path + ": no samples");
  double dt = 10.0;
  if (times.size() > 1) {
    dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t k = 1; k < times.size(); ++k)
      if (std::abs((times[k] - times[k - 1]) - dt) > 1e-6 * dt) throw DataError(path + ": non-uniform sampling");
  }
  Waveform w{std::move(values), dt, ui};
  validate(w);
  return w;
}

}  // namespace eqopt

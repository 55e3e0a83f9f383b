#include <doctest.h>

#include <random>
#include <set>

#include "eqopt/channel.hpp"
#include "eqopt/errors.hpp"
#include "eqopt/eye.hpp"

using namespace eqopt;

namespace {

bool empty_rect(const EyeDiagram& e, std::size_t c0, std::size_t c1, std::size_t r0, std::size_t r1) {
  for (std::size_t r = r0; r <= r1; ++r)
    for (std::size_t c = c0; c <= c1; ++c)
      if (e.occupied(r, c)) return false;
  return true;
}

// Exhaustive search over every center-containing rectangle.
EyeWindow brute_force(const EyeDiagram& e) {
  EyeWindow best;
  const std::size_t cr = e.center_row(), cc = e.center_col();
  if (e.occupied(cr, cc)) return best;
  for (std::size_t c0 = 0; c0 <= cc; ++c0)
    for (std::size_t c1 = cc; c1 < e.cols; ++c1)
      for (std::size_t r0 = 0; r0 <= cr; ++r0)
        for (std::size_t r1 = cr; r1 < e.rows; ++r1) {
          if (!empty_rect(e, c0, c1, r0, r1)) continue;
          const EyeWindow w = make_window(e, c0, c1, r0, r1);
          const double width = w.t1 - w.t0;
          const double best_width = best.t1 - best.t0;
          bool better = w.area > best.area;
          if (w.area == best.area && !best.closed())
            better = width > best_width || (width == best_width && (w.t0 < best.t0 || (w.t0 == best.t0 && w.v0 < best.v0)));
          if (better) best = w;
        }
  return best;
}

}  // namespace

TEST_SUITE("eye") {
  TEST_CASE("constant segment occupies exactly one row") {
    Segment s{std::vector<double>(400, 100.0), 0, 10.0, 156.3};
    const EyeDiagram e = fold_eye(s, EyeGeometry{});
    std::set<std::size_t> rows;
    for (std::size_t r = 0; r < e.rows; ++r)
      for (std::size_t c = 0; c < e.cols; ++c)
        if (e.occupied(r, c)) rows.insert(r);
    REQUIRE(rows.size() == 1);
    CHECK(static_cast<double>(*rows.begin()) + e.v_min == 100.0);
    CHECK_THROWS_AS(fold_eye(Segment{}, EyeGeometry{}), SegmentationError);
  }

  TEST_CASE("clean NRZ has an open center") {
    ChannelConfig ch = ChannelConfig::identity(1);
    ch.n_bits = 20;
    const DataPair p = synthesize_pair(ch);
    const Segment s{p.output.samples, 0, ch.dt, ch.ui};
    const EyeDiagram e = fold_eye(s, EyeGeometry::for_swing(ch.swing));
    CHECK_FALSE(e.occupied(e.center_row(), e.center_col()));
    const std::size_t rail = static_cast<std::size_t>(ch.swing - e.v_min);
    std::size_t on_rail = 0;
    for (std::size_t c = 0; c < e.cols; ++c) on_rail += e.occupied(rail, c) ? 1 : 0;
    CHECK(on_rail > e.cols / 2);
    CHECK(largest_window(e).area > 0.0);
  }

  TEST_CASE("empty and full grids") {
    EyeDiagram e(1000, 157, -500.0, 156.3);
    const EyeWindow w = largest_window(e);
    CHECK(w.area == doctest::Approx((e.v_max - e.v_min) * e.ui).epsilon(1e-12));
    std::fill(e.cells.begin(), e.cells.end(), 1);
    CHECK(largest_window(e).area == 0.0);
    CHECK(largest_window(e).closed());
  }

  TEST_CASE("largest_window matches brute force on random grids") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
      EyeDiagram e(40, 40, -20.0, 40.0);
      const double density = 0.02 + 0.25 * u(rng);
      for (auto& c : e.cells) c = u(rng) < density ? 1 : 0;
      const EyeWindow got = largest_window(e);
      const EyeWindow want = brute_force(e);
      REQUIRE(got.area == want.area);
      if (!want.closed()) {
        REQUIRE(got.col_lo == want.col_lo);
        REQUIRE(got.col_hi == want.col_hi);
        REQUIRE(got.row_lo == want.row_lo);
        REQUIRE(got.row_hi == want.row_hi);
      }
    }
  }

  TEST_CASE("window_improvement") {
    CHECK(window_improvement(100.0, 100.0) == 0.0);
    CHECK(window_improvement(100.0, 150.0) == 50.0);
    CHECK_THROWS_AS(window_improvement(0.0, 50.0), MetricUndefined);
  }

  TEST_CASE("svg rendering mentions the window") {
    EyeDiagram e(40, 40, -20.0, 40.0);
    const std::string svg = render_eye_svg(e, largest_window(e), EyeMask::centered(40.0, 10.0, 10.0));
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
  }
}

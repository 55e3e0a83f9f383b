#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "eqopt/channel.hpp"
#include "eqopt/equalizer.hpp"
#include "eqopt/errors.hpp"

using namespace eqopt;

namespace {

Segment nrz_segment(std::size_t n_bits, std::uint64_t seed, std::vector<double> isi) {
  ChannelConfig ch = ChannelConfig::identity(seed);
  ch.n_bits = n_bits;
  ch.isi_taps = std::move(isi);
  const DataPair p = synthesize_pair(ch);
  return Segment{p.output.samples, 0, ch.dt, ch.ui};
}

// Analytic CTLE response at angular frequency w (rad/s).
std::complex<double> analytic_h(const CtleParams& p, double w) {
  const double w_z = 2.0 * std::numbers::pi * p.f_z * 1e9 * std::pow(10.0, -p.g_p / 20.0);
  const double w_p = 2.0 * std::numbers::pi * p.f_p * 1e9;
  const std::complex<double> s(0.0, w);
  return p.g_dc * (s + w_z) / (s + w_p) * (w_p / w_z);
}

std::complex<double> digital_h(const CtleCoeffs& c, double f_hz, double t_s) {
  const std::complex<double> zi = std::polar(1.0, -2.0 * std::numbers::pi * f_hz * t_s);
  return (c.b0 + c.b1 * zi) / (1.0 + c.a1 * zi);
}

}  // namespace

TEST_SUITE("equalizer") {
  TEST_CASE("map_action endpoints and clipping") {
    const ParamRanges r = ParamRanges::for_kind(EqualizerKind::ctle_dfe);
    const std::vector<double> zero(8, 0.0), one(8, 1.0);
    auto lo = map_action(zero, r), hi = map_action(one, r);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(lo.physical[i] == r.dims[i].low);
      CHECK(hi.physical[i] == r.dims[i].high);
    }
    CHECK_FALSE(lo.clipped);
    std::vector<double> a(8, 0.0);
    a[0] = 0.5;
    CHECK(map_action(a, r).physical[0] == 5.0);
    a[1] = 1.7;
    a[2] = -0.2;
    const auto c = map_action(a, r);
    CHECK(c.clipped);
    CHECK(c.physical[1] == r.dims[1].high);
    CHECK(c.physical[2] == r.dims[2].low);
    CHECK_THROWS_AS(map_action(std::vector<double>(3, 0.0), r), ShapeError);

    std::vector<double> mid{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    const auto back = unmap_params(map_action(mid, r).physical, r);
    for (std::size_t i = 0; i < 8; ++i) CHECK(back[i] == doctest::Approx(mid[i]).epsilon(1e-12));
  }

  TEST_CASE("DFE with zero taps is the identity") {
    const Segment s = nrz_segment(300, 3, {0.35, 0.18, 0.08});
    const Segment y = apply_dfe(s, DfeParams{});
    CHECK(y.data == s.data);
    CHECK(apply_chain(s, std::nullopt, DfeParams{}).data == s.data);
    CHECK(apply_chain(s, CtleParams{1.0, 2.0, 2.0, 0.0}, DfeParams{}).data.size() == s.size());
  }

  TEST_CASE("DFE rejects non-finite input") {
    Segment s = nrz_segment(50, 3, {});
    s.data[17] = std::numeric_limits<double>::quiet_NaN();
    DfeParams p;
    p.taps = {0.1, 0, 0, 0};
    CHECK_THROWS_AS(apply_dfe(s, p), SignalError);
    CHECK_THROWS_AS(apply_ctle(s, CtleParams{}), SignalError);
  }

  TEST_CASE("DFE with matched taps cancels post-cursor ISI") {
    const std::vector<double> isi{0.35, 0.18, 0.08, 0.04};
    ChannelConfig ch = ChannelConfig::identity(5);
    ch.n_bits = 400;
    ch.isi_taps = isi;
    const DataPair p = synthesize_pair(ch);
    const Segment s{p.output.samples, 0, ch.dt, ch.ui};
    DfeParams dp;
    for (std::size_t i = 0; i < 4; ++i) dp.taps[i] = isi[i];
    dp.swing_est = ch.swing;
    const Segment y = apply_dfe(s, dp);
    for (std::size_t k = 0; k < y.size(); ++k) {
      const std::size_t n = symbol_at(static_cast<double>(k) * ch.dt, ch.ui);
      if (n < 4) continue;
      REQUIRE(y.data[k] == doctest::Approx(p.bits[n] ? ch.swing : -ch.swing).epsilon(1e-12));
    }
  }

  TEST_CASE("DFE matches a long-double recursion oracle") {
    const Segment s = nrz_segment(200, 8, {0.5, 0.3});
    DfeParams dp;
    dp.taps = {0.3, 0.2, 0.1, 0.05};
    dp.swing_est = 370.0;
    const Segment y = apply_dfe(s, dp);
    std::vector<long double> dec;
    std::size_t current = std::numeric_limits<std::size_t>::max();
    long double fb = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::size_t n = symbol_at(static_cast<double>(k) * s.dt, s.ui);
      if (n != current) {
        current = n;
        dec.resize(n + 1, 1.0L);
        fb = 0;
        for (std::size_t i = 0; i < 4; ++i)
          fb += static_cast<long double>(dp.taps[i]) * 370.0L * (n >= i + 1 ? dec[n - i - 1] : 1.0L);
      }
      const long double v = static_cast<long double>(s.data[k]) - fb;
      REQUIRE(static_cast<double>(v) == doctest::Approx(y.data[k]).epsilon(1e-12));
      if (ui_center_index(n, 0.0, s.dt, s.ui, s.size()) == k) dec[n] = v >= 0 ? 1.0L : -1.0L;
    }
  }

  TEST_CASE("CTLE DC gain") {
    for (double g : {0.5, 1.0, 3.0, 9.5}) {
      const CtleCoeffs c = ctle_coeffs(CtleParams{g, 0.4, 5.0, 0.0}, 10.0);
      CHECK(std::abs((c.b0 + c.b1) / (1.0 + c.a1) - g) <= 1e-9 * g);
    }
  }

  TEST_CASE("CTLE magnitude matches the prewarped analytic response") {
    const CtleParams p{2.0, 0.3, 3.0, 6.0};
    const double t = 10e-12;
    const CtleCoeffs c = ctle_coeffs(p, 10.0);
    {
      const double f = 0.5e9;
      const double f_w = std::tan(std::numbers::pi * f * t) / (std::numbers::pi * t);
      const double expect = std::abs(analytic_h(p, 2.0 * std::numbers::pi * f_w));
      CHECK(std::abs(std::abs(digital_h(c, f, t)) - expect) <= 1e-6 * expect);
    }
    const double fs = 1.0 / t;
    for (int i = 1; i <= 20; ++i) {
      const double f = fs / 4.0 * i / 21.0;
      const double f_w = std::tan(std::numbers::pi * f * t) / (std::numbers::pi * t);
      const double expect = std::abs(analytic_h(p, 2.0 * std::numbers::pi * f_w));
      REQUIRE(std::abs(std::abs(digital_h(c, f, t)) - expect) <= 1e-6 * expect);
    }
  }

  TEST_CASE("CTLE with cancelling pole and zero passes an impulse") {
    const CtleCoeffs c = ctle_coeffs(CtleParams{1.0, 2.5, 2.5, 0.0}, 10.0);
    CHECK(c.b0 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.b1 == doctest::Approx(c.a1).epsilon(1e-12));
    Segment imp{std::vector<double>(64, 0.0), 0, 10.0, 156.3};
    imp.data[0] = 1.0;
    const Segment y = apply_ctle(imp, CtleParams{1.0, 2.5, 2.5, 0.0});
    CHECK(y.data[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t k = 1; k < y.size(); ++k) CHECK(std::abs(y.data[k]) < 1e-12);
  }

  TEST_CASE("CTLE step response settles at G_dc") {
    const CtleParams p{3.0, 0.5, 4.0, 0.0};
    const double w_p = 2.0 * std::numbers::pi * p.f_p * 1e9;
    const std::size_t settle = static_cast<std::size_t>(std::ceil(10.0 / w_p / 10e-12)) + 1;
    Segment step{std::vector<double>(settle + 200, 1.0), 0, 10.0, 156.3};
    const Segment y = apply_ctle(step, p);
    for (std::size_t k = settle; k < y.size(); ++k) REQUIRE(std::abs(y.data[k] - 3.0) <= 3e-3);
    Segment zero{std::vector<double>(50, 0.0), 0, 10.0, 156.3};
    for (double v : apply_ctle(zero, p).data) CHECK(v == 0.0);
  }

  TEST_CASE("CTLE frequency floor") {
    const CtleCoeffs c = ctle_coeffs(CtleParams{1.0, 0.0, 2.0, 0.0}, 10.0);
    CHECK(c.clamped);
    CHECK(std::isfinite(c.b0));
    CHECK(std::isfinite(c.b1));
    CHECK_FALSE(ctle_coeffs(CtleParams{1.0, 0.5, 2.0, 0.0}, 10.0).clamped);
  }

  TEST_CASE("setting_from_physical layout") {
    const std::vector<double> p{2.0, 0.5, 3.0, 6.0, 0.1, 0.2, 0.3, 0.4};
    const auto s = setting_from_physical(EqualizerKind::ctle_dfe, p);
    REQUIRE(s.ctle);
    CHECK(s.ctle->g_dc == 2.0);
    CHECK(s.ctle->g_p == 6.0);
    CHECK(s.dfe.taps[3] == 0.4);
    const auto d = setting_from_physical(EqualizerKind::dfe, std::vector<double>{0.1, 0.2, 0.3, 0.4});
    CHECK_FALSE(d.ctle);
    CHECK(action_dim(EqualizerKind::dfe) == 4);
    CHECK(parse_equalizer_kind(to_string(EqualizerKind::ctle_dfe)) == EqualizerKind::ctle_dfe);
  }
}

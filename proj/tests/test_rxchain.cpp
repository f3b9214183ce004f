#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "sc/channel.hpp"
#include "sc/rng.hpp"
#include "sc/rxchain.hpp"

using namespace sc;

TEST_CASE("adc: rate checks, stopband, passthrough at 2 sps") {
  Rng rng(2);
  ComplexSignal x;
  x.rate = 8.0;
  x.samples.resize(2048);
  for (auto& v : x.samples) v = rng.next_cgaussian();

  const auto band = brickwall(x, 1.6);
  const auto y = adc(band);
  CHECK(y.rate == doctest::Approx(2.0));
  CHECK(y.size() == band.size() / 4);
  // In-band energy is preserved per retained sample (decimation keeps 1/4 of
  // the samples of a signal whose power is unchanged by the 2 f_b filter).
  CHECK(energy(y) * 4.0 == doctest::Approx(energy(band)).epsilon(0.05));

  // Out-of-band tone at 1.5 f_b vanishes (bin-aligned).
  ComplexSignal tone;
  tone.rate = 8.0;
  tone.samples.resize(2048);
  const double f = std::round(1.5 * 2048 / 8.0) * 8.0 / 2048;
  for (std::size_t k = 0; k < tone.size(); ++k) {
    const double a = 2.0 * std::numbers::pi * f * static_cast<double>(k) / 8.0;
    tone.samples[k] = cplx{std::cos(a), std::sin(a)};
  }
  CHECK(energy(adc(tone)) < 1e-18);

  // Already band-limited at 2 sps: identity.
  ComplexSignal two;
  two.rate = 2.0;
  two.samples.resize(512);
  for (auto& v : two.samples) v = rng.next_cgaussian();
  const auto band2 = brickwall(two, 2.0);
  const auto same = adc(band2);
  CHECK(oracle::max_abs_diff(same.samples, band2.samples) < 1e-12);

  ComplexSignal bad;
  bad.rate = 1.0;
  bad.samples.resize(16);
  CHECK_THROWS_AS(adc(bad), std::invalid_argument);
  bad.rate = 5.0;
  CHECK_THROWS_AS(adc(bad), std::invalid_argument);
}

TEST_CASE("matched filter: impulse response, rate check") {
  ComplexSignal imp;
  imp.rate = 2.0;
  imp.samples.assign(129, cplx{0, 0});
  imp.samples[64] = cplx{1, 0};
  const auto y = matched_filter(imp, 0.1);
  const FirFilter g = rrc_taps(0.1, 32, 2);
  for (int i = 0; i < 65; ++i)
    CHECK(std::abs(y.samples[static_cast<std::size_t>(64 - g.delay + i)] - g.taps[static_cast<std::size_t>(i)]) < 1e-12);

  ComplexSignal bad;
  bad.rate = 8.0;
  bad.samples.resize(16);
  CHECK_THROWS_AS(matched_filter(bad, 0.1), std::invalid_argument);
}

TEST_CASE("noiseless linear chain: symbols recovered; wrong phase explodes") {
  // Full composed reference chain at V_p=1 with exact-inverse DPD.
  SystemParams sys;
  const ConstellationTable qam = square_qam(64);
  Rng rng(8);
  const int payload = 256, guard = 64;
  const int S = payload + 2 * guard;
  std::vector<int> msgs(static_cast<std::size_t>(S));
  for (auto& m : msgs) m = static_cast<int>(rng.next_below(64));
  cvec syms(msgs.size());
  for (std::size_t k = 0; k < msgs.size(); ++k)
    syms[k] = qam.points[static_cast<std::size_t>(msgs[k])];

  const FirFilter ps = rrc_taps(sys.rolloff, sys.span, sys.os);
  const ComplexSignal shaped = pulse_shape(syms, ps, sys.os);
  auto [sp, scale] = peak_normalize(shaped);
  const ComplexSignal tx = iqm(pa(arcsin_dpd(sp, 1.0), 1.0));
  const ComplexSignal rx = matched_filter(adc(tx), sys.rolloff);
  const cvec got = symbol_sample(rx, 0, guard);
  REQUIRE(static_cast<int>(got.size()) == payload);

  // Undo the known composite gain and compare to the sent symbols. The
  // span-32 truncated RRC leaves residual ISI around -55 dB, so recovery is
  // exact to a few parts in a thousand rather than the ideal-filter zero.
  const Calibration cal = calibrate(sys, 18.0, qam);
  double max_err = 0.0, mse = 0.0;
  for (int k = 0; k < payload; ++k) {
    const cplx z = got[static_cast<std::size_t>(k)] * (scale / cal.p0);
    const double e = std::abs(z - syms[static_cast<std::size_t>(k + guard)]);
    max_err = std::max(max_err, e);
    mse += e * e;
  }
  CHECK(std::sqrt(mse / payload) < 8e-3);  // ~ -45 dB residual ISI energy
  CHECK(max_err < 3e-2);

  // Deliberate half-symbol misalignment: ISI-dominated.
  const cvec off = symbol_sample(rx, 1, guard);
  double err_off = 0.0;
  for (int k = 0; k < payload; ++k) {
    const cplx z = off[static_cast<std::size_t>(k)] * (scale / cal.p0);
    err_off += std::norm(z - syms[static_cast<std::size_t>(k + guard)]);
  }
  CHECK(err_off / payload > 0.5);

  CHECK_THROWS_AS(symbol_sample(rx, -1, guard), std::invalid_argument);
  CHECK_THROWS_AS(symbol_sample(rx, 1 << 24, guard), std::invalid_argument);
  // Zero-length payload: guards swallow everything.
  ComplexSignal tiny;
  tiny.rate = 2.0;
  tiny.samples.resize(16);
  CHECK(symbol_sample(tiny, 0, 8).empty());
}

TEST_CASE("demap_mindist: exact point, tie to smaller index") {
  ConstellationTable t;
  t.points = {cplx{1, 0}, cplx{-1, 0}};
  CHECK(demap_mindist(cvec{cplx{1, 0}}, t) == std::vector<int>{0});
  CHECK(demap_mindist(cvec{cplx{-0.9, 0.2}}, t) == std::vector<int>{1});
  // Midpoint ties toward the smaller index.
  CHECK(demap_mindist(cvec{cplx{0, 0.3}}, t) == std::vector<int>{0});
}

TEST_CASE("demap_nn: softmax normalization, argmax shift invariance") {
  const int M = 16;
  const MlpSpec spec = demapper_spec(M);
  std::vector<double> theta(spec.param_count());
  Rng rng(12);
  mlp_init(spec, theta, rng);

  cvec y(100);
  for (auto& v : y) v = rng.next_cgaussian();
  const auto q = demap_nn_probs(y, theta, M);
  for (std::size_t k = 0; k < y.size(); ++k) {
    double s = 0.0;
    for (int m = 0; m < M; ++m) {
      const double p = q[k * M + static_cast<std::size_t>(m)];
      CHECK(p >= 0.0);
      s += p;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Adding a constant to all logits (via the output bias) leaves decisions.
  const auto d1 = demap_nn(y, theta, M);
  std::vector<double> theta2 = theta;
  // Output layer biases are the last M entries.
  for (int m = 0; m < M; ++m) theta2[theta2.size() - 1 - static_cast<std::size_t>(m)] += 3.25;
  const auto d2 = demap_nn(y, theta2, M);
  CHECK(d1 == d2);
}

TEST_CASE("ser: exact counts and ci95 formula") {
  std::vector<int> tx(100, 1), rx(100, 1);
  CHECK(ser(tx, rx).ser == 0.0);
  rx[17] = 2;
  const auto r = ser(tx, rx);
  CHECK(r.ser == doctest::Approx(0.01));
  CHECK(r.n_errors == 1);

  // ci95 at p = 0.01, n = 1e6.
  std::vector<int> big_tx(1000000, 0), big_rx(1000000, 0);
  for (int i = 0; i < 10000; ++i) big_rx[static_cast<std::size_t>(i * 100)] = 1;
  const auto rb = ser(big_tx, big_rx);
  CHECK(rb.ser == doctest::Approx(0.01));
  CHECK(rb.ci95 == doctest::Approx(1.95e-4).epsilon(0.01));

  // Permutation invariance over symbol order.
  std::vector<int> tx2{1, 2, 3, 4}, rx2{1, 0, 3, 0};
  std::vector<int> tx3{4, 3, 2, 1}, rx3{0, 3, 0, 1};
  CHECK(ser(tx2, rx2).ser == ser(tx3, rx3).ser);

  CHECK_THROWS_AS(ser(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  CHECK_THROWS_AS(ser(tx2, std::vector<int>{1}), std::invalid_argument);
}

TEST_CASE("analytic qam ser sanity") {
  CHECK(qam_ser_analytic(64, 1e6) < 1e-12);
  CHECK(qam_ser_analytic(64, std::pow(10.0, 1.8)) == doctest::Approx(0.1404).epsilon(0.01));
  // 4-QAM at gamma = 10: per-rail Q(sqrt(10)), SER = 1 - (1 - Q)^2.
  const double q = 0.5 * std::erfc(std::sqrt(10.0) / std::sqrt(2.0));
  CHECK(qam_ser_analytic(4, 10.0) == doctest::Approx(2 * q - q * q).epsilon(1e-9));
}

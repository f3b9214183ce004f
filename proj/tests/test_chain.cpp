#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "sc/chain.hpp"
#include "sc/chain_blocks.hpp"
#include "sc/experiments.hpp"
#include "sc/rng.hpp"
#include "sc/training.hpp"

using namespace sc;

namespace {

SystemParams small_sys() {
  SystemParams sys;
  sys.M = 16;
  sys.os = 8;
  sys.span = 16;
  sys.rolloff = 0.1;
  sys.guard = 32;
  return sys;
}

ParamVector random_params(const SystemParams& sys, std::uint64_t seed) {
  ParamVector p = make_chain_params(sys);
  Rng rng(seed);
  // Mapper: noisy lattice.
  const ConstellationTable t = square_qam(sys.M);
  auto t1 = p.seg(Seg::theta1);
  for (int m = 0; m < sys.M; ++m) {
    t1[2 * static_cast<std::size_t>(m)] =
        t.points[static_cast<std::size_t>(m)].real() + 0.05 * rng.next_gaussian();
    t1[2 * static_cast<std::size_t>(m) + 1] =
        t.points[static_cast<std::size_t>(m)].imag() + 0.05 * rng.next_gaussian();
  }
  // Filter: RRC plus perturbation, small imaginary part.
  const FirFilter rrc = rrc_taps(sys.rolloff, sys.span, sys.os);
  auto t2 = p.seg(Seg::theta2);
  for (std::size_t j = 0; j < rrc.taps.size(); ++j) {
    t2[2 * j] = rrc.taps[j].real() * (1.0 + 0.02 * rng.next_gaussian());
    t2[2 * j + 1] = 0.005 * rng.next_gaussian();
  }
  mlp_init(predistorter_spec(), p.seg(Seg::theta3), rng);
  mlp_init(demapper_spec(sys.M), p.seg(Seg::theta4), rng);
  return p;
}

// The composed reference chain, block by block through the public ops.
cvec reference_forward(const SystemParams& sys, const ChannelConfig& ch, const Calibration& cal,
                       const ParamVector& params, const std::vector<std::vector<int>>& msgs,
                       const FrameGeom& geom, DpdMode dpd, const Pipeline::Options& opts) {
  const int S = geom.total_symbols();
  const std::size_t V = geom.n_samples();
  const ConstellationTable table = normalize_table(
      std::span<const cplx>(reinterpret_cast<const cplx*>(params.seg(Seg::theta1).data()),
                            static_cast<std::size_t>(sys.M)));
  FirFilter theta2;
  const auto t2 = params.seg(Seg::theta2);
  theta2.taps.resize(t2.size() / 2);
  for (std::size_t j = 0; j < theta2.taps.size(); ++j)
    theta2.taps[j] = cplx{t2[2 * j], t2[2 * j + 1]};
  theta2.delay = static_cast<int>(theta2.taps.size() - 1) / 2;

  std::vector<ComplexSignal> outs;
  std::vector<double> scales;
  for (int c = 0; c < ch.n_channels; ++c) {
    cvec syms(static_cast<std::size_t>(S));
    for (int k = 0; k < S; ++k)
      syms[static_cast<std::size_t>(k)] =
          table.points[static_cast<std::size_t>(msgs[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)])];
    ComplexSignal s = pulse_shape(syms, theta2, sys.os);
    s.rate = static_cast<double>(sys.os);
    auto [sp, scale] = peak_normalize(s);
    scales.push_back(scale);
    ComplexSignal st;
    switch (dpd) {
      case DpdMode::NeuralNet:
        st = predistort_nn(sp, params.seg(Seg::theta3));
        break;
      case DpdMode::ArcsinClip:
        st = arcsin_dpd(sp, opts.v_clip);
        break;
      case DpdMode::None:
        st = sp;
        break;
    }
    outs.push_back(iqm(pa(st, opts.v_p)));
  }
  ComplexSignal y = multiplex(outs, ch.eta);
  if (!ch.noiseless && cal.sigma2 > 0.0) {
    Rng rng(opts.noise_seed);
    const double sd = std::sqrt(cal.sigma2);
    for (auto& v : y.samples) v += sd * rng.next_cgaussian();
  }
  const ComplexSignal z2 = matched_filter(adc(y), sys.rolloff, sys.span);
  const cvec picked = symbol_sample(z2, 0, geom.guard);

  const double agc = scales[static_cast<std::size_t>(ch.n_channels / 2)] / cal.p0;
  cvec z(picked.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = picked[k] * agc;
  (void)V;
  return z;
}

}  // namespace

TEST_CASE("fused pipeline output equals the composed reference ops") {
  const SystemParams sys = small_sys();
  ChannelConfig ch;
  ch.n_channels = 3;
  ch.eta = 0.07;
  ch.snr_db = 18.0;
  const ConstellationTable qam = square_qam(sys.M);
  const Calibration cal = calibrate(sys, ch.snr_db, qam);

  FrameGeom geom;
  geom.payload = 160;
  geom.guard = sys.guard;
  geom.os = sys.os;

  const ParamVector params = random_params(sys, 51);
  const Pipeline pipe(sys, ch, cal, geom);
  const auto msgs = pipe.draw_messages(1234);

  for (DpdMode dpd : {DpdMode::NeuralNet, DpdMode::ArcsinClip, DpdMode::None}) {
    Pipeline::Options opts;
    opts.dpd = dpd;
    opts.v_p = 0.9;
    opts.v_clip = 0.95;
    opts.noise_seed = 777;
    Pipeline::Work w;
    pipe.forward(params, msgs, opts, w);
    const cvec ref = reference_forward(sys, ch, cal, params, msgs, geom, dpd, opts);
    REQUIRE(w.z.size() == ref.size());
    double scale = 0.0;
    for (auto& v : ref) scale = std::max(scale, std::abs(v));
    CHECK(oracle::max_abs_diff(w.z, ref) < 1e-9 * std::max(1.0, scale));
  }
}

TEST_CASE("single-channel fused pipeline equals composed ops") {
  const SystemParams sys = small_sys();
  ChannelConfig ch;
  ch.n_channels = 1;
  ch.noiseless = true;
  const ConstellationTable qam = square_qam(sys.M);
  const Calibration cal = calibrate(sys, 18.0, qam);
  FrameGeom geom;
  geom.payload = 96;
  geom.guard = sys.guard;
  geom.os = sys.os;
  const ParamVector params = random_params(sys, 99);
  const Pipeline pipe(sys, ch, cal, geom);
  const auto msgs = pipe.draw_messages(55);
  Pipeline::Options opts;
  opts.dpd = DpdMode::NeuralNet;
  Pipeline::Work w;
  pipe.forward(params, msgs, opts, w);
  const cvec ref = reference_forward(sys, ch, cal, params, msgs, geom, DpdMode::NeuralNet, opts);
  CHECK(oracle::max_abs_diff(w.z, ref) < 1e-10);
}

TEST_CASE("end-to-end loss gradients pass finite differences per segment") {
  const SystemParams sys = small_sys();
  ChannelConfig ch;
  ch.n_channels = 3;
  ch.eta = 0.05;
  ch.snr_db = 18.0;
  const ConstellationTable qam = square_qam(sys.M);
  const Calibration cal = calibrate(sys, ch.snr_db, qam);
  const ParamVector base = random_params(sys, 4242);

  auto cases = make_endtoend_check_cases(sys, ch, cal, base, 31337);
  REQUIRE(cases.size() == 4);
  for (auto& c : cases) {
    GradCheckOptions opt;
    opt.step = c.fd_step;
    opt.max_coords = 50;
    const auto rep = grad_check(*c.block, c.input, c.params, opt);
    INFO(c.block->name(), " worst=", rep.worst, " err=", rep.max_rel_err);
    CHECK(rep.max_rel_err < c.tol);
    CHECK(rep.n_checked >= std::min<std::size_t>(50, c.params.size()));
  }
}

TEST_CASE("noiseless linear-chain SER is zero through the pipeline") {
  // DPD inverse active, single channel, V_p = 1: the chain degenerates to a
  // linear system and any spread constellation decodes error-free.
  SystemParams sys;
  sys.M = 64;
  ChannelConfig ch;
  ch.n_channels = 1;
  ch.noiseless = true;
  const ConstellationTable qam = square_qam(sys.M);
  const Calibration cal = calibrate(sys, 18.0, qam);
  const ParamVector p = baseline_params(sys, qam);

  EvalConfig ev;
  ev.payload = 2048;
  ev.guard = sys.guard;
  ev.target_errors = 1;
  ev.max_frames = 2;
  ev.seed = 5;
  const SerResult r = eval_ser(sys, ch, cal, p, DpdMode::ArcsinClip, DemapKind::MinDist, ev);
  CHECK(r.ser == 0.0);
  CHECK(r.n_symbols >= 2048);
}

TEST_CASE("pipeline determinism: identical seeds give identical outputs") {
  const SystemParams sys = small_sys();
  ChannelConfig ch;
  ch.n_channels = 3;
  ch.eta = 0.1;
  const ConstellationTable qam = square_qam(sys.M);
  const Calibration cal = calibrate(sys, 18.0, qam);
  FrameGeom geom;
  geom.payload = 128;
  geom.guard = sys.guard;
  geom.os = sys.os;
  const ParamVector params = random_params(sys, 7);
  const Pipeline pipe(sys, ch, cal, geom);
  const auto msgs = pipe.draw_messages(42);
  Pipeline::Options opts;
  opts.dpd = DpdMode::NeuralNet;
  opts.noise_seed = 99;
  Pipeline::Work w1, w2;
  pipe.forward(params, msgs, opts, w1);
  pipe.forward(params, msgs, opts, w2);
  CHECK(oracle::max_abs_diff(w1.z, w2.z) == 0.0);
}

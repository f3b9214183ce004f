#include "sc/chain.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sc/fastmath.hpp"
#include "sc/fft.hpp"
#include "sc/rng.hpp"

namespace sc {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

std::size_t chain_fft_len(const FrameGeom& g, int span) {
  const std::size_t taps = static_cast<std::size_t>(span) * g.os + 1;
  return fft::next_pow2(g.n_samples() + taps);
}

// Kernel layout realizing the delay-aligned "same" convolution as a circular
// product: h_circ[(j - delay) mod n] = taps[j].
void place_kernel(std::span<const double> taps_interleaved, int delay, cvec& h_circ) {
  const std::size_t n = h_circ.size();
  std::fill(h_circ.begin(), h_circ.end(), cplx{0.0, 0.0});
  const std::size_t ntaps = taps_interleaved.size() / 2;
  for (std::size_t j = 0; j < ntaps; ++j) {
    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(j) - delay;
    h_circ[(idx % static_cast<std::ptrdiff_t>(n) + n) % n] =
        cplx{taps_interleaved[2 * j], taps_interleaved[2 * j + 1]};
  }
}

// Zeroes the DFT bins with |f| > 1 f_b at the channel rate (the ADC
// brick-wall), matching the reference brickwall() bin selection exactly.
void apply_adc_mask(cvec& spec, int os) {
  const std::size_t n = spec.size();
  const std::size_t kmax = n / static_cast<std::size_t>(os);  // f = k*os/n = 1
  for (std::size_t k = kmax + 1; k < n - kmax; ++k) spec[k] = cplx{0.0, 0.0};
}

}  // namespace

ParamVector make_chain_params(const SystemParams& sys) {
  const std::size_t ntaps = static_cast<std::size_t>(sys.span) * sys.os + 1;
  const MlpSpec dpd = predistorter_spec();
  const MlpSpec dem = demapper_spec(sys.M);
  std::vector<SegmentLayout> segs(4);
  segs[0] = {"theta1", 0, static_cast<std::size_t>(sys.M) * 2,
             {static_cast<std::size_t>(sys.M), 2}};
  segs[1] = {"theta2", 0, ntaps * 2, {ntaps, 2}};
  segs[2] = {"theta3", 0, dpd.param_count(), {dpd.param_count()}};
  segs[3] = {"theta4", 0, dem.param_count(), {dem.param_count()}};
  return make_param_vector(segs);
}

Pipeline::Pipeline(const SystemParams& sys, const ChannelConfig& ch, const Calibration& cal,
                   const FrameGeom& geom)
    : sys_(sys), ch_(ch), cal_(cal), geom_(geom) {
  if (ch_.n_channels % 2 == 0 || ch_.n_channels < 1)
    throw std::invalid_argument("Pipeline: channel count must be odd");
  if (geom_.os != sys_.os) throw std::invalid_argument("Pipeline: geometry/system os mismatch");
  if (!fft::is_pow2(static_cast<std::size_t>(sys_.os)) || sys_.os < 4)
    throw std::invalid_argument("Pipeline: oversampling must be a power of two >= 4");
  if (static_cast<double>(sys_.os) < ch_.n_channels * (1.0 + ch_.eta) + 1.0)
    throw std::invalid_argument("Pipeline: spectral fit violated");
  n_fft_ = chain_fft_len(geom_, sys_.span);
  mf_ = rrc_taps(sys_.rolloff, sys_.span, 2);

  const std::size_t v = geom_.n_samples();
  const int half = ch_.n_channels / 2;
  phasors_.resize(static_cast<std::size_t>(ch_.n_channels));
  for (int i = -half; i <= half; ++i) {
    cvec& ph = phasors_[static_cast<std::size_t>(i + half)];
    if (i == 0) continue;  // center channel is unshifted; empty vector marks identity
    ph.resize(v);
    const double w = 2.0 * std::numbers::pi * i * (1.0 + ch_.eta) / sys_.os;
    for (std::size_t k = 0; k < v; ++k)
      ph[k] = cplx{std::cos(w * static_cast<double>(k)), std::sin(w * static_cast<double>(k))};
  }
}

std::vector<std::vector<int>> Pipeline::draw_messages(std::uint64_t seed) const {
  std::vector<std::vector<int>> msgs(static_cast<std::size_t>(ch_.n_channels));
  for (int c = 0; c < ch_.n_channels; ++c) {
    Rng rng(seed_stream(seed, 0xA0, static_cast<std::uint64_t>(c)));
    auto& m = msgs[static_cast<std::size_t>(c)];
    m.resize(static_cast<std::size_t>(geom_.total_symbols()));
    for (int& v : m) v = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(sys_.M)));
  }
  return msgs;
}

void Pipeline::forward(const ParamVector& params, const std::vector<std::vector<int>>& msgs,
                       const Options& opts, Work& w) const {
  const int nch = ch_.n_channels;
  const int S = geom_.total_symbols();
  const std::size_t V = geom_.n_samples();
  const std::size_t N = n_fft_;
  const std::size_t NS = N / static_cast<std::size_t>(sys_.os);
  if (static_cast<int>(msgs.size()) != nch)
    throw std::invalid_argument("Pipeline::forward: message channel count mismatch");

  w.opts = opts;
  w.scales.assign(static_cast<std::size_t>(nch), 0.0);
  w.syms.resize(static_cast<std::size_t>(nch));
  w.xs_spec.resize(static_cast<std::size_t>(nch));
  w.dpd_cache.resize(static_cast<std::size_t>(nch));
  w.preclip.resize(static_cast<std::size_t>(nch));
  w.s_tilde.resize(static_cast<std::size_t>(nch));

  const ConstellationTable table = normalize_table(
      std::span<const cplx>(reinterpret_cast<const cplx*>(params.seg(Seg::theta1).data()),
                            static_cast<std::size_t>(sys_.M)));

  // Pulse-shaper spectrum, shared by all channels.
  cvec h_spec(N);
  place_kernel(params.seg(Seg::theta2), sys_.span * sys_.os / 2, h_spec);
  fft::forward(h_spec);

  cvec ymux(V, cplx{0.0, 0.0});
  cvec sbuf(N);
  const MlpSpec dpd_spec = predistorter_spec();

  for (int c = 0; c < nch; ++c) {
    const auto& m = msgs[static_cast<std::size_t>(c)];
    if (static_cast<int>(m.size()) != S)
      throw std::invalid_argument("Pipeline::forward: bad frame length");

    cvec& syms = w.syms[static_cast<std::size_t>(c)];
    syms.resize(static_cast<std::size_t>(S));
    for (int k = 0; k < S; ++k) {
      const int mi = m[static_cast<std::size_t>(k)];
      if (mi < 0 || mi >= sys_.M)
        throw std::invalid_argument("Pipeline::forward: message out of range");
      syms[static_cast<std::size_t>(k)] = table.points[static_cast<std::size_t>(mi)];
    }

    cvec& xs = w.xs_spec[static_cast<std::size_t>(c)];
    xs.assign(NS, cplx{0.0, 0.0});
    std::copy(syms.begin(), syms.end(), xs.begin());
    fft::forward(xs);

    // Pulse shaping: tiled symbol spectrum times the kernel spectrum.
    for (std::size_t k = 0; k < N; ++k) sbuf[k] = xs[k & (NS - 1)] * h_spec[k];
    fft::inverse(sbuf);

    double scale;
    if (opts.frozen_scales) {
      scale = (*opts.frozen_scales)[static_cast<std::size_t>(c)];
    } else {
      scale = 0.0;
      for (std::size_t k = 0; k < V; ++k)
        scale = std::max({scale, std::fabs(sbuf[k].real()), std::fabs(sbuf[k].imag())});
      if (scale <= 0.0) throw std::invalid_argument("Pipeline::forward: all-zero frame");
    }
    w.scales[static_cast<std::size_t>(c)] = scale;

    // Rails of s' = s / scale.
    std::vector<double> u(2 * V);
    {
      const double inv = 1.0 / scale;
      const double* sr = reinterpret_cast<const double*>(sbuf.data());
      for (std::size_t r = 0; r < 2 * V; ++r) u[r] = sr[r] * inv;
    }

    cvec& st = w.s_tilde[static_cast<std::size_t>(c)];
    st.resize(V);
    double* st_rails = reinterpret_cast<double*>(st.data());
    switch (opts.dpd) {
      case DpdMode::NeuralNet: {
        auto& pre = w.preclip[static_cast<std::size_t>(c)];
        pre.resize(2 * V);
        mlp_forward(dpd_spec, params.seg(Seg::theta3), u.data(), static_cast<int>(2 * V),
                    pre.data(), opts.keep_grad ? &w.dpd_cache[static_cast<std::size_t>(c)]
                                               : nullptr);
        for (std::size_t r = 0; r < 2 * V; ++r)
          st_rails[r] = arith_min(arith_max(pre[r], -1.0), 1.0);
        break;
      }
      case DpdMode::ArcsinClip:
        arcsin_dpd_rails(u.data(), st_rails, 2 * V, opts.v_clip);
        break;
      case DpdMode::None:
        std::copy(u.begin(), u.end(), st_rails);
        break;
    }

    // PA + IQM + multiplex shift into the sum.
    const cvec& ph = phasors_[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < V; ++k) {
      const cplx e_out{std::sin(kHalfPi * opts.v_p * st[k].real()),
                       std::sin(kHalfPi * opts.v_p * st[k].imag())};
      ymux[k] += ph.empty() ? e_out : e_out * ph[k];
    }
  }

  if (!ch_.noiseless && cal_.sigma2 > 0.0) {
    Rng rng(opts.noise_seed);
    const double s = std::sqrt(cal_.sigma2);
    for (std::size_t k = 0; k < V; ++k) ymux[k] += s * rng.next_cgaussian();
  }

  // ADC: brick-wall at 2 f_b on the padded frame, then decimation to 2 sps.
  cvec ybuf(N, cplx{0.0, 0.0});
  std::copy(ymux.begin(), ymux.end(), ybuf.begin());
  fft::forward(ybuf);
  apply_adc_mask(ybuf, sys_.os);
  fft::inverse(ybuf);

  const int dec = sys_.os / 2;
  const std::size_t n2 = static_cast<std::size_t>(S) * 2;
  ComplexSignal w2;
  w2.rate = 2.0;
  w2.samples.resize(n2);
  for (std::size_t mm = 0; mm < n2; ++mm) w2.samples[mm] = ybuf[mm * static_cast<std::size_t>(dec)];

  const ComplexSignal zmf = convolve(w2, mf_);

  const double agc = w.scales[static_cast<std::size_t>(nch / 2)] / cal_.p0;
  w.z.resize(static_cast<std::size_t>(geom_.payload));
  for (int k = 0; k < geom_.payload; ++k)
    w.z[static_cast<std::size_t>(k)] =
        zmf.samples[2 * static_cast<std::size_t>(k + geom_.guard)] * agc;
}

void Pipeline::backward(const ParamVector& params, const std::vector<std::vector<int>>& msgs,
                        const Work& w, std::span<const cplx> z_cot,
                        std::span<double> grad) const {
  if (w.opts.dpd != DpdMode::NeuralNet || !w.opts.keep_grad)
    throw std::logic_error("Pipeline::backward: forward must keep gradients in NN mode");
  const int nch = ch_.n_channels;
  const int S = geom_.total_symbols();
  const std::size_t V = geom_.n_samples();
  const std::size_t N = n_fft_;
  const std::size_t NS = N / static_cast<std::size_t>(sys_.os);
  const MlpSpec dpd_spec = predistorter_spec();

  // Receiver adjoint: symbol cotangents back to the multiplexed waveform.
  const double agc = w.scales[static_cast<std::size_t>(nch / 2)] / cal_.p0;
  ComplexSignal zmf_cot;
  zmf_cot.rate = 2.0;
  zmf_cot.samples.assign(static_cast<std::size_t>(S) * 2, cplx{0.0, 0.0});
  for (int k = 0; k < geom_.payload; ++k)
    zmf_cot.samples[2 * static_cast<std::size_t>(k + geom_.guard)] =
        z_cot[static_cast<std::size_t>(k)] * agc;

  // Matched filter is real and even-symmetric, so its adjoint is itself.
  const ComplexSignal w2_cot = convolve(zmf_cot, mf_);

  cvec ybar(N, cplx{0.0, 0.0});
  const int dec = sys_.os / 2;
  for (std::size_t mm = 0; mm < w2_cot.size(); ++mm)
    ybar[mm * static_cast<std::size_t>(dec)] = w2_cot.samples[mm];
  fft::forward(ybar);
  apply_adc_mask(ybar, sys_.os);
  fft::inverse(ybar);

  const auto& need = w.opts.need_grad;
  const bool need_upstream = need[0] || need[1];  // mapper or filter gradients

  // Pulse-shaper spectrum (recomputed; cheaper than caching across calls).
  cvec h_spec(N);
  place_kernel(params.seg(Seg::theta2), sys_.span * sys_.os / 2, h_spec);
  fft::forward(h_spec);

  cvec h_acc;
  if (need[1]) h_acc.assign(N, cplx{0.0, 0.0});
  cvec sbar(N);
  std::span<double> g1 = grad.subspan(params.layout(Seg::theta1).offset,
                                      params.layout(Seg::theta1).size);
  std::span<double> g2 = grad.subspan(params.layout(Seg::theta2).offset,
                                      params.layout(Seg::theta2).size);
  std::span<double> g3 = need[2] ? grad.subspan(params.layout(Seg::theta3).offset,
                                                params.layout(Seg::theta3).size)
                                 : std::span<double>{};

  std::vector<double> st_cot(2 * V), u_cot(2 * V);
  for (int c = 0; c < nch; ++c) {
    const cvec& ph = phasors_[static_cast<std::size_t>(c)];
    const cvec& st = w.s_tilde[static_cast<std::size_t>(c)];
    const auto& pre = w.preclip[static_cast<std::size_t>(c)];

    // Through the multiplex rotation and the per-rail IQM + PA.
    const double kpa = kHalfPi * w.opts.v_p;
    for (std::size_t k = 0; k < V; ++k) {
      const cplx e = ph.empty() ? ybar[k] : ybar[k] * std::conj(ph[k]);
      st_cot[2 * k] = e.real() * kpa * std::cos(kpa * st[k].real());
      st_cot[2 * k + 1] = e.imag() * kpa * std::cos(kpa * st[k].imag());
    }
    // Hard clip: pass-through inside [-1, 1].
    for (std::size_t r = 0; r < 2 * V; ++r)
      st_cot[r] = std::fabs(pre[r]) <= 1.0 ? st_cot[r] : 0.0;

    if (!need[2] && !need_upstream) continue;
    mlp_backward(dpd_spec, params.seg(Seg::theta3), w.dpd_cache[static_cast<std::size_t>(c)],
                 st_cot.data(), need_upstream ? u_cot.data() : nullptr, g3);
    if (!need_upstream) continue;

    // s' = s / c with the batch scale treated as a constant.
    const double inv = 1.0 / w.scales[static_cast<std::size_t>(c)];
    std::fill(sbar.begin(), sbar.end(), cplx{0.0, 0.0});
    double* sb = reinterpret_cast<double*>(sbar.data());
    for (std::size_t r = 0; r < 2 * V; ++r) sb[r] = u_cot[r] * inv;

    fft::forward(sbar);

    // Tap gradient: accumulate conj(X_up) .* Sbar over channels.
    if (need[1]) {
      const cvec& xs = w.xs_spec[static_cast<std::size_t>(c)];
      for (std::size_t k = 0; k < N; ++k) h_acc[k] += std::conj(xs[k & (NS - 1)]) * sbar[k];
    }

    // Symbol cotangents: fold the spectrum to the symbol-rate grid.
    if (need[0]) {
      cvec fold(NS, cplx{0.0, 0.0});
      for (std::size_t k = 0; k < N; ++k) fold[k & (NS - 1)] += sbar[k] * std::conj(h_spec[k]);
      fft::inverse(fold);
      const double scale = 1.0 / static_cast<double>(sys_.os);
      cvec xbar(static_cast<std::size_t>(S));
      for (int j = 0; j < S; ++j)
        xbar[static_cast<std::size_t>(j)] = fold[static_cast<std::size_t>(j)] * scale;

      map_messages_backward(msgs[static_cast<std::size_t>(c)],
                            std::span<const cplx>(reinterpret_cast<const cplx*>(
                                                      params.seg(Seg::theta1).data()),
                                                  static_cast<std::size_t>(sys_.M)),
                            xbar, g1);
    }
  }

  if (need[1]) {
    fft::inverse(h_acc);
    const int delay = sys_.span * sys_.os / 2;
    const std::size_t ntaps = params.layout(Seg::theta2).size / 2;
    for (std::size_t j = 0; j < ntaps; ++j) {
      const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(j) - delay;
      const cplx v = h_acc[(idx % static_cast<std::ptrdiff_t>(N) + N) % N];
      g2[2 * j] += v.real();
      g2[2 * j + 1] += v.imag();
    }
  }
}

SerResult eval_ser(const SystemParams& sys, const ChannelConfig& ch, const Calibration& cal,
                   const ParamVector& params, DpdMode dpd, DemapKind demap,
                   const EvalConfig& cfg) {
  FrameGeom geom;
  geom.payload = cfg.payload;
  geom.guard = cfg.guard;
  geom.os = sys.os;
  const Pipeline pipe(sys, ch, cal, geom);
  const int center = ch.n_channels / 2;

  ConstellationTable table;
  if (demap == DemapKind::MinDist)
    table = normalize_table(
        std::span<const cplx>(reinterpret_cast<const cplx*>(params.seg(Seg::theta1).data()),
                              static_cast<std::size_t>(sys.M)));

  long errors = 0, total = 0;
  Pipeline::Work w;
  for (int f = 0; f < cfg.max_frames && (errors < cfg.target_errors || total == 0); ++f) {
    const auto msgs = pipe.draw_messages(seed_stream(cfg.seed, 0xF0A, static_cast<std::uint64_t>(f)));
    Pipeline::Options opts;
    opts.dpd = dpd;
    opts.v_p = ch.v_p;
    opts.v_clip = ch.v_clip;
    opts.noise_seed = seed_stream(cfg.seed, 0xB0B, static_cast<std::uint64_t>(f));
    pipe.forward(params, msgs, opts, w);

    std::vector<int> decided;
    if (demap == DemapKind::NeuralNet) {
      decided = demap_nn(w.z, params.seg(Seg::theta4), sys.M);
    } else {
      // Data-aided complex gain fit keeps the slicer calibrated when the
      // chain is not exactly linear (V_p != 1 or clipping active).
      const cvec& tx = w.syms[static_cast<std::size_t>(center)];
      cplx num{0.0, 0.0};
      double den = 0.0;
      for (int k = 0; k < geom.payload; ++k) {
        const cplx x = tx[static_cast<std::size_t>(k + geom.guard)];
        num += std::conj(x) * w.z[static_cast<std::size_t>(k)];
        den += std::norm(x);
      }
      const cplx g = num / den;
      cvec zc(w.z.size());
      for (std::size_t k = 0; k < zc.size(); ++k) zc[k] = w.z[k] / g;
      decided = demap_mindist(zc, table);
    }

    const auto& tx_msgs = msgs[static_cast<std::size_t>(center)];
    for (int k = 0; k < geom.payload; ++k) {
      if (decided[static_cast<std::size_t>(k)] != tx_msgs[static_cast<std::size_t>(k + geom.guard)])
        ++errors;
    }
    total += geom.payload;
  }

  SerResult r;
  r.n_errors = errors;
  r.n_symbols = total;
  r.ser = total > 0 ? static_cast<double>(errors) / static_cast<double>(total) : 0.0;
  r.ci95 = total > 0 ? 1.96 * std::sqrt(r.ser * (1.0 - r.ser) / static_cast<double>(total)) : 0.0;
  return r;
}

}  // namespace sc

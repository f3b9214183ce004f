#include "sc/chain_blocks.hpp"

#include <cmath>
#include <numbers>

#include "sc/fastmath.hpp"
#include "sc/rng.hpp"
#include "sc/training.hpp"

namespace sc {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

cvec to_cvec(std::span<const double> rails) {
  cvec v(rails.size() / 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cplx{rails[2 * i], rails[2 * i + 1]};
  return v;
}

std::vector<double> to_rails(std::span<const cplx> v) {
  std::vector<double> r(v.size() * 2);
  for (std::size_t i = 0; i < v.size(); ++i) {
    r[2 * i] = v[i].real();
    r[2 * i + 1] = v[i].imag();
  }
  return r;
}

FirFilter adjoint_filter(const FirFilter& f) {
  FirFilter a;
  const std::size_t L = f.taps.size();
  a.taps.resize(L);
  for (std::size_t n = 0; n < L; ++n) a.taps[n] = std::conj(f.taps[L - 1 - n]);
  a.delay = static_cast<int>(L) - 1 - f.delay;
  return a;
}

class MapperBlock : public DiffBlock {
 public:
  MapperBlock(std::vector<int> msgs, int M) : msgs_(std::move(msgs)), M_(M) {}
  std::string name() const override { return "mapper_normalize"; }
  std::size_t input_size() const override { return 0; }
  std::size_t param_size() const override { return static_cast<std::size_t>(M_) * 2; }
  std::vector<double> forward(std::span<const double>, std::span<const double> p) const override {
    const cvec raw = to_cvec(p);
    return to_rails(map_messages(msgs_, raw));
  }
  void backward(std::span<const double>, std::span<const double> p,
                std::span<const double> cot, std::span<double>, std::span<double> dp) const override {
    std::fill(dp.begin(), dp.end(), 0.0);
    const cvec raw = to_cvec(p);
    map_messages_backward(msgs_, raw, to_cvec(cot), dp);
  }

 private:
  std::vector<int> msgs_;
  int M_;
};

class FirBlock : public DiffBlock {
 public:
  FirBlock(std::size_t len, std::size_t ntaps, int delay)
      : len_(len), ntaps_(ntaps), delay_(delay) {}
  std::string name() const override { return "fir_convolve"; }
  std::size_t input_size() const override { return len_ * 2; }
  std::size_t param_size() const override { return ntaps_ * 2; }
  std::vector<double> forward(std::span<const double> in, std::span<const double> p) const override {
    ComplexSignal x{to_cvec(in), 1.0};
    FirFilter f{to_cvec(p), delay_};
    return to_rails(convolve(x, f).samples);
  }
  void backward(std::span<const double> in, std::span<const double> p,
                std::span<const double> cot, std::span<double> din,
                std::span<double> dp) const override {
    const FirFilter f{to_cvec(p), delay_};
    const ComplexSignal cbar{to_cvec(cot), 1.0};
    const auto dx = convolve(cbar, adjoint_filter(f)).samples;
    const auto r = to_rails(dx);
    std::copy(r.begin(), r.end(), din.begin());
    // d taps[j] = sum_k cot[k] conj(x[k + delay - j])
    const cvec x = to_cvec(in);
    for (std::size_t j = 0; j < ntaps_; ++j) {
      cplx acc{0.0, 0.0};
      for (std::size_t k = 0; k < cbar.samples.size(); ++k) {
        const std::ptrdiff_t xi = static_cast<std::ptrdiff_t>(k) + delay_ -
                                  static_cast<std::ptrdiff_t>(j);
        if (xi >= 0 && xi < static_cast<std::ptrdiff_t>(x.size()))
          acc += cbar.samples[k] * std::conj(x[static_cast<std::size_t>(xi)]);
      }
      dp[2 * j] = acc.real();
      dp[2 * j + 1] = acc.imag();
    }
  }

 private:
  std::size_t len_, ntaps_;
  int delay_;
};

// Straight-through peak normalization: the scale is frozen at the
// linearization point, matching the chain's differentiation semantics.
class PeakNormBlock : public DiffBlock {
 public:
  PeakNormBlock(std::size_t len, double frozen_scale) : len_(len), scale_(frozen_scale) {}
  std::string name() const override { return "peak_normalize"; }
  std::size_t input_size() const override { return len_ * 2; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / scale_;
    return out;
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    for (std::size_t i = 0; i < cot.size(); ++i) din[i] = cot[i] / scale_;
  }

 private:
  std::size_t len_;
  double scale_;
};

class PredistortBlock : public DiffBlock {
 public:
  explicit PredistortBlock(std::size_t rails) : rails_(rails) {}
  std::string name() const override { return "predistort_nn"; }
  std::size_t input_size() const override { return rails_; }
  std::size_t param_size() const override { return predistorter_spec().param_count(); }
  std::vector<double> forward(std::span<const double> in, std::span<const double> p) const override {
    std::vector<double> out(in.size());
    mlp_forward(predistorter_spec(), p, in.data(), static_cast<int>(in.size()), out.data());
    clip_rails(out.data(), out.size());
    return out;
  }
  void backward(std::span<const double> in, std::span<const double> p,
                std::span<const double> cot, std::span<double> din,
                std::span<double> dp) const override {
    const MlpSpec spec = predistorter_spec();
    MlpCache cache;
    std::vector<double> pre(in.size());
    mlp_forward(spec, p, in.data(), static_cast<int>(in.size()), pre.data(), &cache);
    std::vector<double> dpre(cot.begin(), cot.end());
    for (std::size_t i = 0; i < pre.size(); ++i)
      if (std::fabs(pre[i]) > 1.0) dpre[i] = 0.0;
    std::fill(dp.begin(), dp.end(), 0.0);
    mlp_backward(spec, p, cache, dpre.data(), din.data(), dp);
  }

 private:
  std::size_t rails_;
};

class PaBlock : public DiffBlock {
 public:
  PaBlock(std::size_t rails, double v_p) : rails_(rails), v_p_(v_p) {}
  std::string name() const override { return "pa_gain"; }
  std::size_t input_size() const override { return rails_; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = v_p_ * in[i];
    return out;
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    for (std::size_t i = 0; i < cot.size(); ++i) din[i] = v_p_ * cot[i];
  }

 private:
  std::size_t rails_;
  double v_p_;
};

class IqmBlock : public DiffBlock {
 public:
  explicit IqmBlock(std::size_t rails) : rails_(rails) {}
  std::string name() const override { return "iqm_sine"; }
  std::size_t input_size() const override { return rails_; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    std::vector<double> out(in.size());
    iqm_rails(in.data(), out.data(), in.size());
    return out;
  }
  void backward(std::span<const double> in, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    for (std::size_t i = 0; i < in.size(); ++i)
      din[i] = cot[i] * kHalfPi * std::cos(kHalfPi * in[i]);
  }

 private:
  std::size_t rails_;
};

class MultiplexBlock : public DiffBlock {
 public:
  MultiplexBlock(int nch, std::size_t len, double eta, double rate)
      : nch_(nch), len_(len), eta_(eta), rate_(rate) {}
  std::string name() const override { return "multiplex"; }
  std::size_t input_size() const override { return static_cast<std::size_t>(nch_) * len_ * 2; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    std::vector<ComplexSignal> chans(static_cast<std::size_t>(nch_));
    for (int c = 0; c < nch_; ++c) {
      chans[static_cast<std::size_t>(c)].rate = rate_;
      chans[static_cast<std::size_t>(c)].samples =
          to_cvec(in.subspan(static_cast<std::size_t>(c) * len_ * 2, len_ * 2));
    }
    return to_rails(multiplex(chans, eta_).samples);
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    ComplexSignal cbar{to_cvec(cot), rate_};
    const int half = nch_ / 2;
    for (int c = 0; c < nch_; ++c) {
      const double df = (c - half) * (1.0 + eta_);
      const cvec dc = (c == half) ? cbar.samples : freq_shift(cbar, -df).samples;
      const auto r = to_rails(dc);
      std::copy(r.begin(), r.end(),
                din.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * len_ * 2));
    }
  }

 private:
  int nch_;
  std::size_t len_;
  double eta_, rate_;
};

class AwgnBlock : public DiffBlock {
 public:
  AwgnBlock(std::vector<double> noise) : noise_(std::move(noise)) {}
  std::string name() const override { return "awgn_fixed_noise"; }
  std::size_t input_size() const override { return noise_.size(); }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] + noise_[i];
    return out;
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    std::copy(cot.begin(), cot.end(), din.begin());
  }

 private:
  std::vector<double> noise_;
};

class BrickwallBlock : public DiffBlock {
 public:
  BrickwallBlock(std::size_t len, double bw, double rate) : len_(len), bw_(bw), rate_(rate) {}
  std::string name() const override { return "brickwall"; }
  std::size_t input_size() const override { return len_ * 2; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    return to_rails(brickwall({to_cvec(in), rate_}, bw_).samples);
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    // Bin zeroing is an orthogonal projection: self-adjoint.
    const auto r = to_rails(brickwall({to_cvec(cot), rate_}, bw_).samples);
    std::copy(r.begin(), r.end(), din.begin());
  }

 private:
  std::size_t len_;
  double bw_, rate_;
};

class AdcBlock : public DiffBlock {
 public:
  AdcBlock(std::size_t len, double rate) : len_(len), rate_(rate) {}
  std::string name() const override { return "adc"; }
  std::size_t input_size() const override { return len_ * 2; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    return to_rails(adc({to_cvec(in), rate_}).samples);
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    const int factor = static_cast<int>(std::lround(rate_ / 2.0));
    ComplexSignal up{cvec(len_, cplx{0.0, 0.0}), rate_};
    const cvec c = to_cvec(cot);
    for (std::size_t i = 0; i < c.size(); ++i) up.samples[i * static_cast<std::size_t>(factor)] = c[i];
    const auto r = to_rails(brickwall(up, 2.0).samples);
    std::copy(r.begin(), r.end(), din.begin());
  }

 private:
  std::size_t len_;
  double rate_;
};

class MatchedFilterBlock : public DiffBlock {
 public:
  MatchedFilterBlock(std::size_t len, double rolloff, int span)
      : len_(len), f_(rrc_taps(rolloff, span, 2)) {}
  std::string name() const override { return "matched_filter"; }
  std::size_t input_size() const override { return len_ * 2; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    return to_rails(convolve({to_cvec(in), 2.0}, f_).samples);
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    const auto r = to_rails(convolve({to_cvec(cot), 2.0}, adjoint_filter(f_)).samples);
    std::copy(r.begin(), r.end(), din.begin());
  }

 private:
  std::size_t len_;
  FirFilter f_;
};

class SymbolSampleBlock : public DiffBlock {
 public:
  SymbolSampleBlock(std::size_t len, int delay, int guard)
      : len_(len), delay_(delay), guard_(guard) {}
  std::string name() const override { return "symbol_sample"; }
  std::size_t input_size() const override { return len_ * 2; }
  std::size_t param_size() const override { return 0; }
  std::vector<double> forward(std::span<const double> in, std::span<const double>) const override {
    return to_rails(symbol_sample({to_cvec(in), 2.0}, delay_, guard_));
  }
  void backward(std::span<const double>, std::span<const double>, std::span<const double> cot,
                std::span<double> din, std::span<double>) const override {
    std::fill(din.begin(), din.end(), 0.0);
    const cvec c = to_cvec(cot);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const std::size_t idx = static_cast<std::size_t>(delay_) +
                              2 * (k + static_cast<std::size_t>(guard_));
      din[2 * idx] = c[k].real();
      din[2 * idx + 1] = c[k].imag();
    }
  }

 private:
  std::size_t len_;
  int delay_, guard_;
};

class DemapCeBlock : public DiffBlock {
 public:
  DemapCeBlock(std::vector<int> labels, int M) : labels_(std::move(labels)), M_(M) {}
  std::string name() const override { return "demap_softmax_ce"; }
  std::size_t input_size() const override { return labels_.size() * 2; }
  std::size_t param_size() const override { return demapper_spec(M_).param_count(); }
  std::vector<double> forward(std::span<const double> in, std::span<const double> p) const override {
    const int n = static_cast<int>(labels_.size());
    std::vector<double> logits(static_cast<std::size_t>(n) * M_);
    mlp_forward(demapper_spec(M_), p, in.data(), n, logits.data());
    return {ce_from_logits(logits, labels_, M_, {})};
  }
  void backward(std::span<const double> in, std::span<const double> p,
                std::span<const double> cot, std::span<double> din,
                std::span<double> dp) const override {
    const int n = static_cast<int>(labels_.size());
    const MlpSpec spec = demapper_spec(M_);
    MlpCache cache;
    std::vector<double> logits(static_cast<std::size_t>(n) * M_),
        dlogits(static_cast<std::size_t>(n) * M_);
    mlp_forward(spec, p, in.data(), n, logits.data(), &cache);
    ce_from_logits(logits, labels_, M_, dlogits);
    for (double& v : dlogits) v *= cot[0];
    std::fill(dp.begin(), dp.end(), 0.0);
    mlp_backward(spec, p, cache, dlogits.data(), din.data(), dp);
  }

 private:
  std::vector<int> labels_;
  int M_;
};

// Composed chain loss restricted to one parameter segment, with fixed
// messages, fixed noise, and frozen normalization scales.
class EndToEndBlock : public DiffBlock {
 public:
  EndToEndBlock(const SystemParams& sys, const ChannelConfig& ch, const Calibration& cal,
                ParamVector base, Seg seg, std::uint64_t seed)
      : sys_(sys), ch_(ch), seg_(seg), base_(std::move(base)) {
    FrameGeom geom;
    geom.payload = 192;
    geom.guard = sys.guard;
    geom.os = sys.os;
    pipe_ = std::make_unique<Pipeline>(sys, ch, cal, geom);
    msgs_ = pipe_->draw_messages(seed_stream(seed, 0xE2E, 1));
    noise_seed_ = seed_stream(seed, 0xE2E, 2);
    const int center = ch.n_channels / 2;
    labels_.resize(static_cast<std::size_t>(geom.payload));
    for (int k = 0; k < geom.payload; ++k)
      labels_[static_cast<std::size_t>(k)] =
          msgs_[static_cast<std::size_t>(center)][static_cast<std::size_t>(k + geom.guard)];
    // Linearization point for the straight-through batch scales.
    Pipeline::Work w;
    Pipeline::Options opts = options(false);
    opts.frozen_scales = nullptr;
    pipe_->forward(base_, msgs_, opts, w);
    scales_ = w.scales;
  }

  std::string name() const override {
    return std::string("endtoend_loss_") + kSegNames[static_cast<int>(seg_)];
  }
  std::size_t input_size() const override { return 0; }
  std::size_t param_size() const override { return base_.layout(seg_).size; }

  std::vector<double> forward(std::span<const double>, std::span<const double> p) const override {
    ParamVector full = base_;
    std::copy(p.begin(), p.end(), full.values.begin() + static_cast<std::ptrdiff_t>(full.layout(seg_).offset));
    Pipeline::Work w;
    Pipeline::Options opts = options(false);
    pipe_->forward(full, msgs_, opts, w);
    const int n = static_cast<int>(labels_.size());
    std::vector<double> logits(static_cast<std::size_t>(n) * sys_.M);
    mlp_forward(demapper_spec(sys_.M), full.seg(Seg::theta4),
                reinterpret_cast<const double*>(w.z.data()), n, logits.data());
    return {ce_from_logits(logits, labels_, sys_.M, {})};
  }

  void backward(std::span<const double>, std::span<const double> p,
                std::span<const double> cot, std::span<double>,
                std::span<double> dp) const override {
    ParamVector full = base_;
    std::copy(p.begin(), p.end(), full.values.begin() + static_cast<std::ptrdiff_t>(full.layout(seg_).offset));
    Pipeline::Work w;
    Pipeline::Options opts = options(true);
    pipe_->forward(full, msgs_, opts, w);

    const int n = static_cast<int>(labels_.size());
    const MlpSpec dem = demapper_spec(sys_.M);
    MlpCache cache;
    std::vector<double> logits(static_cast<std::size_t>(n) * sys_.M),
        dlogits(static_cast<std::size_t>(n) * sys_.M);
    mlp_forward(dem, full.seg(Seg::theta4), reinterpret_cast<const double*>(w.z.data()), n,
                logits.data(), &cache);
    ce_from_logits(logits, labels_, sys_.M, dlogits);
    for (double& v : dlogits) v *= cot[0];

    std::vector<double> grad(full.size(), 0.0);
    std::vector<double> dz(static_cast<std::size_t>(n) * 2);
    mlp_backward(dem, full.seg(Seg::theta4), cache, dlogits.data(), dz.data(),
                 {grad.data() + full.layout(Seg::theta4).offset, full.layout(Seg::theta4).size});
    pipe_->backward(full, msgs_, w,
                    std::span<const cplx>(reinterpret_cast<const cplx*>(dz.data()),
                                          static_cast<std::size_t>(n)),
                    grad);
    const auto& l = full.layout(seg_);
    std::copy(grad.begin() + static_cast<std::ptrdiff_t>(l.offset),
              grad.begin() + static_cast<std::ptrdiff_t>(l.offset + l.size), dp.begin());
  }

 private:
  Pipeline::Options options(bool keep_grad) const {
    Pipeline::Options o;
    o.dpd = DpdMode::NeuralNet;
    o.v_p = ch_.v_p;
    o.v_clip = ch_.v_clip;
    o.noise_seed = noise_seed_;
    o.keep_grad = keep_grad;
    o.frozen_scales = &scales_;
    return o;
  }

  SystemParams sys_;
  ChannelConfig ch_;
  Seg seg_;
  ParamVector base_;
  std::unique_ptr<Pipeline> pipe_;
  std::vector<std::vector<int>> msgs_;
  std::vector<int> labels_;
  std::vector<double> scales_;
  std::uint64_t noise_seed_ = 0;
};

std::vector<double> random_rails(Rng& rng, std::size_t n, double amp) {
  std::vector<double> v(n);
  for (double& x : v) x = amp * (2.0 * rng.next_double() - 1.0);
  return v;
}

}  // namespace

std::vector<CheckCase> make_block_check_cases(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckCase> cases;

  {
    CheckCase c;
    const int M = 16;
    std::vector<int> msgs(40);
    for (int& m : msgs) m = static_cast<int>(rng.next_below(M));
    c.block = std::make_unique<MapperBlock>(std::move(msgs), M);
    c.params = random_rails(rng, 2 * M, 1.5);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<FirBlock>(48, 9, 4);
    c.input = random_rails(rng, 96, 1.0);
    c.params = random_rails(rng, 18, 0.7);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.input = random_rails(rng, 64, 2.0);
    double peak = 0.0;
    for (double v : c.input) peak = std::max(peak, std::fabs(v));
    c.block = std::make_unique<PeakNormBlock>(32, peak);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<PredistortBlock>(96);
    c.input = random_rails(rng, 96, 0.9);
    const MlpSpec spec = predistorter_spec();
    c.params.resize(spec.param_count());
    Rng r2(seed_stream(seed, 0x99));
    mlp_init(spec, c.params, r2);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<PaBlock>(64, 0.9);
    c.input = random_rails(rng, 64, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<IqmBlock>(64);
    c.input = random_rails(rng, 64, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<MultiplexBlock>(3, 40, 0.1, 8.0);
    c.input = random_rails(rng, 3 * 80, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<AwgnBlock>(random_rails(rng, 128, 0.3));
    c.input = random_rails(rng, 128, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<BrickwallBlock>(64, 2.0, 8.0);
    c.input = random_rails(rng, 128, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<AdcBlock>(64, 8.0);
    c.input = random_rails(rng, 128, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<MatchedFilterBlock>(96, 0.1, 8);
    c.input = random_rails(rng, 192, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    c.block = std::make_unique<SymbolSampleBlock>(64, 0, 4);
    c.input = random_rails(rng, 128, 1.0);
    cases.push_back(std::move(c));
  }
  {
    CheckCase c;
    const int M = 16;
    std::vector<int> labels(48);
    for (int& m : labels) m = static_cast<int>(rng.next_below(M));
    const std::size_t n = labels.size();
    c.block = std::make_unique<DemapCeBlock>(std::move(labels), M);
    c.input = random_rails(rng, n * 2, 1.2);
    const MlpSpec spec = demapper_spec(M);
    c.params.resize(spec.param_count());
    Rng r2(seed_stream(seed, 0x98));
    mlp_init(spec, c.params, r2);
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<CheckCase> make_endtoend_check_cases(const SystemParams& sys,
                                                 const ChannelConfig& ch,
                                                 const Calibration& cal,
                                                 const ParamVector& base,
                                                 std::uint64_t seed) {
  // Back the pre-distorter off the clip boundary so finite differences stay
  // on one side of the kink at the frame peak.
  ParamVector nudged = base;
  {
    const MlpSpec spec = predistorter_spec();
    const auto sizes = spec.layer_sizes();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 2 < sizes.size(); ++l)
      off += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    auto t3 = nudged.seg(Seg::theta3);
    for (std::size_t i = off; i < t3.size(); ++i) t3[i] *= 0.98;
  }

  std::vector<CheckCase> cases;
  for (int s = 0; s < kNumSegments; ++s) {
    CheckCase c;
    c.block = std::make_unique<EndToEndBlock>(sys, ch, cal, nudged, static_cast<Seg>(s), seed);
    const auto seg = nudged.seg(static_cast<Seg>(s));
    c.params.assign(seg.begin(), seg.end());
    c.fd_step = 1e-6;
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace sc

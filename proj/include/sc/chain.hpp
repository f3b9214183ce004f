#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "sc/channel.hpp"
#include "sc/gradcore.hpp"
#include "sc/mlp.hpp"
#include "sc/rxchain.hpp"
#include "sc/signal.hpp"
#include "sc/txchain.hpp"

namespace sc {

struct FrameGeom {
  int payload = 4096;
  int guard = 64;
  int os = 8;

  int total_symbols() const { return payload + 2 * guard; }
  std::size_t n_samples() const {
    return static_cast<std::size_t>(total_symbols()) * static_cast<std::size_t>(os);
  }
};

enum class DpdMode { NeuralNet, ArcsinClip, None };

/// Builds the standard parameter layout: theta1 = M x 2 raw constellation,
/// theta2 = complex pulse-shaper taps (span*os+1, interleaved), theta3 =
/// per-rail pre-distorter MLP, theta4 = demapper MLP.
ParamVector make_chain_params(const SystemParams& sys);

/// End-to-end multi-channel transceiver frame processor. Forward produces the
/// normalized center-channel payload symbols z; backward propagates dL/dz to
/// the full parameter gradient with hand-derived vector-Jacobian products per
/// block. All waveform convolutions and the brick-wall run on a power-of-two
/// padded frame and are bit-equivalent to the reference block composition
/// (see tests).
class Pipeline {
 public:
  Pipeline(const SystemParams& sys, const ChannelConfig& ch, const Calibration& cal,
           const FrameGeom& geom);

  struct Options {
    DpdMode dpd = DpdMode::NeuralNet;
    double v_p = 1.0;
    double v_clip = 1.0;
    std::uint64_t noise_seed = 0;
    bool keep_grad = false;
    /// Segments whose gradient backward must produce; frozen segments can be
    /// skipped to save work.
    std::array<bool, 4> need_grad = {true, true, true, true};
    /// When non-null, use these per-channel peak scales instead of measuring
    /// (the straight-through linearization used by finite-difference checks).
    const std::vector<double>* frozen_scales = nullptr;
  };

  struct Work {
    // outputs
    cvec z;                            // payload symbols, AGC-normalized
    std::vector<double> scales;        // per-channel peak_normalize scale
    // per-channel caches for backward
    std::vector<cvec> syms;            // table-mapped symbols, length S
    std::vector<cvec> xs_spec;         // symbol-domain spectrum, length NS
    std::vector<MlpCache> dpd_cache;
    std::vector<std::vector<double>> preclip;  // rail values before the hard clip
    std::vector<cvec> s_tilde;         // post-DPD drive, length V
    Options opts;
  };

  const FrameGeom& geom() const { return geom_; }
  const SystemParams& sys() const { return sys_; }
  const ChannelConfig& channel() const { return ch_; }
  const Calibration& calibration() const { return cal_; }
  int n_channels() const { return ch_.n_channels; }
  std::size_t n_fft() const { return n_fft_; }

  /// Uniform random messages for every channel, [n_channels][total_symbols].
  std::vector<std::vector<int>> draw_messages(std::uint64_t seed) const;

  void forward(const ParamVector& params, const std::vector<std::vector<int>>& msgs,
               const Options& opts, Work& w) const;

  /// Accumulates (+=) the full-parameter gradient. Requires a forward pass
  /// with keep_grad = true and DpdMode::NeuralNet.
  void backward(const ParamVector& params, const std::vector<std::vector<int>>& msgs,
                const Work& w, std::span<const cplx> z_cot, std::span<double> grad) const;

 private:
  SystemParams sys_;
  ChannelConfig ch_;
  Calibration cal_;
  FrameGeom geom_;
  std::size_t n_fft_ = 0;
  FirFilter mf_;                  // fixed receive RRC at 2 sps
  std::vector<cvec> phasors_;     // per-channel multiplex rotation over the valid region
};

struct EvalConfig {
  int payload = 16384;
  int guard = 64;
  int target_errors = 400;
  int max_frames = 64;
  std::uint64_t seed = 1;
};

enum class DemapKind { NeuralNet, MinDist };

/// Monte-Carlo SER of the center channel: accumulates frames until the error
/// target or the frame cap is reached. MinDist applies a data-aided complex
/// gain fit per frame before slicing (simulator-side receiver calibration);
/// the neural demapper consumes z directly.
SerResult eval_ser(const SystemParams& sys, const ChannelConfig& ch, const Calibration& cal,
                   const ParamVector& params, DpdMode dpd, DemapKind demap,
                   const EvalConfig& cfg);

}  // namespace sc

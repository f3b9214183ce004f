#pragma once

#include <cstdint>

#include "sc/signal.hpp"
#include "sc/txchain.hpp"

namespace sc {

/// Static simulation geometry shared by every block.
struct SystemParams {
  int M = 64;
  int os = 8;        // samples per symbol at the channel rate
  int span = 32;     // pulse-shaping / matched-filter span in symbols
  double rolloff = 0.10;
  int guard = 64;    // guard symbols per frame end, excluded from scoring
};

struct ChannelConfig {
  int n_channels = 3;  // odd, so a center channel exists
  double eta = 0.0;    // guard band in f_b units; spacing is (1 + eta) f_b
  double v_p = 1.0;    // PA drive peak
  double v_clip = 1.0; // baseline DPD clipping factor
  double snr_db = 18.0;
  bool noiseless = false;
  std::uint64_t seed = 1;
};

/// E_in = v_p * s_tilde; the DAC is ideal and the PA is linear.
ComplexSignal pa(const ComplexSignal& s_tilde, double v_p);

/// Per-rail modulator transfer E_out = sin(E_in * pi/2).
ComplexSignal iqm(const ComplexSignal& e_in);

void iqm_rails(const double* u, double* out, std::size_t n);

/// Channel i (center-indexed) shifted by i*(1+eta)*f_b and summed.
ComplexSignal multiplex(const std::vector<ComplexSignal>& channels, double eta);

/// Adds circularly-symmetric complex white noise with per-sample variance
/// sigma2 (E|n|^2). Deterministic given seed.
ComplexSignal awgn(const ComplexSignal& x, double sigma2, std::uint64_t seed);

/// Per-sample complex noise variance at the simulation rate for the
/// configured SNR: sigma2 = p_ref * rate * 10^(-snr_db/10). An infinite
/// snr_db yields 0 (noiseless switch).
double noise_variance(double p_ref, double rate, double snr_db);

/// Fixed per-configuration channel calibration. p_ref is the mean per-sample
/// power of a single reference channel (baseline constellation, RRC shaping,
/// exact-inverse DPD, V_p = 1) measured after the IQM, so the injected noise
/// power never tracks the scheme under test. p0 is the composite
/// symbol-instant gain of the PS -> ADC -> MF cascade and c_cal the reference
/// frame's peak-normalization scale; together they fix the nominal receiver
/// scaling z = y * c / p0.
struct Calibration {
  double p_ref = 0.0;
  double sigma2 = 0.0;      // at channel rate
  double p0 = 0.0;
  double c_cal = 0.0;
  double sigma2_sym = 0.0;  // E|n|^2 of normalized symbols in the linearized chain
};

Calibration calibrate(const SystemParams& sys, double snr_db,
                      const ConstellationTable& baseline_table);

}  // namespace sc

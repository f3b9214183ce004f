#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sc {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

/// A finite sequence of complex baseband samples. `rate` is the sample rate
/// in units of the symbol rate f_b (samples per symbol period).
struct ComplexSignal {
  cvec samples;
  double rate = 1.0;

  std::size_t size() const { return samples.size(); }
};

/// FIR filter as an explicit tap vector. `delay` is the index of the nominal
/// center tap; "same"-length convolution aligns its output on this tap so
/// that cascades of centered filters introduce no net group delay.
struct FirFilter {
  cvec taps;
  int delay = 0;
};

double energy(const ComplexSignal& x);

/// Zero-insertion upsampling: output[k*factor] = x[k], everything else 0.
ComplexSignal upsample(const ComplexSignal& x, int factor);

/// Decimation: output[k] = x[offset + k*factor].
ComplexSignal downsample(const ComplexSignal& x, int factor, int offset = 0);

/// "Same"-length linear convolution aligned on f.delay:
/// out[k] = sum_n f.taps[n] * x[k + f.delay - n], x zero-padded outside.
ComplexSignal convolve(const ComplexSignal& x, const FirFilter& f);

/// Root-raised-cosine prototype, span_symbols*samples_per_symbol+1 taps,
/// unit energy, singularities filled with their analytic limits.
FirFilter rrc_taps(double rolloff, int span_symbols, int samples_per_symbol);

/// Ideal low-pass via DFT bin zeroing (circular on the frame, internally
/// padded to a power of two). Keeps bins with |f| <= bandwidth/2 (f_b units).
ComplexSignal brickwall(const ComplexSignal& x, double bandwidth);

/// out[k] = x[k] * exp(i 2 pi df k / rate); df in f_b units.
ComplexSignal freq_shift(const ComplexSignal& x, double df);

struct SpectrumPoint {
  double freq;          // f_b units
  double magnitude_db;  // normalized so the peak bin is 0 dB
};

/// Zero-padded DFT magnitude of the filter taps, peak-normalized to 0 dB.
/// samples_per_symbol is the rate the filter was designed for.
std::vector<SpectrumPoint> power_spectrum(const FirFilter& f, std::size_t n_fft,
                                          int samples_per_symbol);

}  // namespace sc

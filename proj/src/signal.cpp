#include "sc/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sc/fft.hpp"

namespace sc {

double energy(const ComplexSignal& x) {
  double e = 0.0;
  for (const cplx& v : x.samples) e += std::norm(v);
  return e;
}

ComplexSignal upsample(const ComplexSignal& x, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
  ComplexSignal out;
  out.rate = x.rate * factor;
  out.samples.assign(x.size() * static_cast<std::size_t>(factor), cplx{0.0, 0.0});
  for (std::size_t k = 0; k < x.size(); ++k)
    out.samples[k * static_cast<std::size_t>(factor)] = x.samples[k];
  return out;
}

ComplexSignal downsample(const ComplexSignal& x, int factor, int offset) {
  if (factor < 1) throw std::invalid_argument("downsample: factor must be >= 1");
  if (offset < 0 || offset >= factor)
    throw std::invalid_argument("downsample: offset out of range");
  ComplexSignal out;
  out.rate = x.rate / factor;
  const std::size_t n = (x.size() > static_cast<std::size_t>(offset))
                            ? (x.size() - offset + factor - 1) / factor
                            : 0;
  out.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k)
    out.samples[k] = x.samples[static_cast<std::size_t>(offset) + k * factor];
  return out;
}

namespace {

ComplexSignal convolve_direct(const ComplexSignal& x, const FirFilter& f) {
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t ntaps = static_cast<std::ptrdiff_t>(f.taps.size());
  ComplexSignal out;
  out.rate = x.rate;
  out.samples.assign(x.size(), cplx{0.0, 0.0});
  for (std::ptrdiff_t k = 0; k < len; ++k) {
    cplx acc{0.0, 0.0};
    const std::ptrdiff_t base = k + f.delay;
    const std::ptrdiff_t n_lo = std::max<std::ptrdiff_t>(0, base - (len - 1));
    const std::ptrdiff_t n_hi = std::min(ntaps - 1, base);
    for (std::ptrdiff_t n = n_lo; n <= n_hi; ++n) acc += f.taps[n] * x.samples[base - n];
    out.samples[k] = acc;
  }
  return out;
}

ComplexSignal convolve_fft(const ComplexSignal& x, const FirFilter& f) {
  const std::size_t len = x.size();
  const std::size_t ntaps = f.taps.size();
  const std::size_t n = fft::next_pow2(len + ntaps);
  cvec xs(n, cplx{0.0, 0.0});
  std::copy(x.samples.begin(), x.samples.end(), xs.begin());
  // Kernel placed so that circular convolution realizes the delay-aligned
  // "same" output: h_circ[(j - delay) mod n] = taps[j].
  cvec hs(n, cplx{0.0, 0.0});
  for (std::size_t j = 0; j < ntaps; ++j) {
    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(j) - f.delay;
    hs[(idx % static_cast<std::ptrdiff_t>(n) + n) % n] = f.taps[j];
  }
  fft::forward(xs);
  fft::forward(hs);
  for (std::size_t i = 0; i < n; ++i) xs[i] *= hs[i];
  fft::inverse(xs);
  ComplexSignal out;
  out.rate = x.rate;
  out.samples.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(len));
  return out;
}

}  // namespace

ComplexSignal convolve(const ComplexSignal& x, const FirFilter& f) {
  if (x.size() == 0 || f.taps.empty())
    throw std::invalid_argument("convolve: empty signal or filter");
  // FFT route pays off once the direct product count dwarfs ~3 transforms.
  if (x.size() * f.taps.size() > (std::size_t{1} << 21)) return convolve_fft(x, f);
  return convolve_direct(x, f);
}

FirFilter rrc_taps(double rolloff, int span_symbols, int samples_per_symbol) {
  if (rolloff < 0.0 || rolloff > 1.0)
    throw std::invalid_argument("rrc_taps: rolloff must be in [0,1]");
  if (span_symbols < 1 || samples_per_symbol < 1)
    throw std::invalid_argument("rrc_taps: span and sps must be positive");
  if ((span_symbols * samples_per_symbol) % 2 != 0)
    throw std::invalid_argument("rrc_taps: span*sps must be even");

  const int n = span_symbols * samples_per_symbol + 1;
  const int mid = (n - 1) / 2;
  const double pi = std::numbers::pi;
  const double b = rolloff;
  FirFilter f;
  f.taps.resize(n);
  f.delay = mid;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i - mid) / samples_per_symbol;
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 - b + 4.0 * b / pi;
    } else if (b > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * b)) < 1e-9) {
      const double a = pi / (4.0 * b);
      v = (b / std::sqrt(2.0)) *
          ((1.0 + 2.0 / pi) * std::sin(a) + (1.0 - 2.0 / pi) * std::cos(a));
    } else {
      const double den = pi * t * (1.0 - 16.0 * b * b * t * t);
      v = (std::sin(pi * t * (1.0 - b)) + 4.0 * b * t * std::cos(pi * t * (1.0 + b))) / den;
    }
    f.taps[i] = cplx{v, 0.0};
  }
  double e = 0.0;
  for (const cplx& v : f.taps) e += std::norm(v);
  const double s = 1.0 / std::sqrt(e);
  for (cplx& v : f.taps) v *= s;
  return f;
}

ComplexSignal brickwall(const ComplexSignal& x, double bandwidth) {
  if (bandwidth <= 0.0) throw std::invalid_argument("brickwall: bandwidth must be > 0");
  if (bandwidth > x.rate)
    throw std::invalid_argument("brickwall: bandwidth exceeds sample rate");
  if (x.size() == 0) return x;
  const std::size_t n = fft::next_pow2(x.size());
  cvec buf(n, cplx{0.0, 0.0});
  std::copy(x.samples.begin(), x.samples.end(), buf.begin());
  fft::forward(buf);
  const double bw2 = bandwidth / 2.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::ptrdiff_t ks = (k <= n / 2) ? static_cast<std::ptrdiff_t>(k)
                                           : static_cast<std::ptrdiff_t>(k) -
                                                 static_cast<std::ptrdiff_t>(n);
    const double f = std::abs(static_cast<double>(ks)) * x.rate / static_cast<double>(n);
    if (f > bw2 + 1e-12) buf[k] = cplx{0.0, 0.0};
  }
  fft::inverse(buf);
  ComplexSignal out;
  out.rate = x.rate;
  out.samples.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(x.size()));
  return out;
}

ComplexSignal freq_shift(const ComplexSignal& x, double df) {
  ComplexSignal out;
  out.rate = x.rate;
  out.samples.resize(x.size());
  const double w = 2.0 * std::numbers::pi * df / x.rate;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = w * static_cast<double>(k);
    out.samples[k] = x.samples[k] * cplx{std::cos(a), std::sin(a)};
  }
  return out;
}

std::vector<SpectrumPoint> power_spectrum(const FirFilter& f, std::size_t n_fft,
                                          int samples_per_symbol) {
  if (n_fft < f.taps.size())
    throw std::invalid_argument("power_spectrum: n_fft smaller than tap count");
  const std::size_t n = fft::next_pow2(n_fft);
  cvec buf(n, cplx{0.0, 0.0});
  std::copy(f.taps.begin(), f.taps.end(), buf.begin());
  fft::forward(buf);
  double peak = 0.0;
  for (const cplx& v : buf) peak = std::max(peak, std::norm(v));
  if (peak <= 0.0) throw std::invalid_argument("power_spectrum: all-zero filter");
  std::vector<SpectrumPoint> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    // Reorder to ascending frequency, -sps/2 .. +sps/2.
    const std::size_t src = (k + n / 2) % n;
    const std::ptrdiff_t ks = static_cast<std::ptrdiff_t>(k) -
                              static_cast<std::ptrdiff_t>(n / 2);
    out[k].freq = static_cast<double>(ks) * samples_per_symbol / static_cast<double>(n);
    out[k].magnitude_db = 10.0 * std::log10(std::max(std::norm(buf[src]) / peak, 1e-300));
  }
  return out;
}

}  // namespace sc

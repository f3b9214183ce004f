// Independent reference implementations used as test oracles. These stay
// deliberately naive (quadratic DFT, literal convolution sums) so they share
// no code path with the library under test.
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "sc/signal.hpp"

namespace oracle {

using sc::cplx;
using sc::cvec;

// O(n^2) DFT straight from the definition.
inline cvec naive_dft(const cvec& x, bool inverse = false) {
  const std::size_t n = x.size();
  cvec out(n, cplx{0.0, 0.0});
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t t = 0; t < n; ++t) {
      const double a = sign * 2.0 * std::numbers::pi * static_cast<double>(k) *
                       static_cast<double>(t) / static_cast<double>(n);
      out[k] += x[t] * cplx{std::cos(a), std::sin(a)};
    }
    if (inverse) out[k] /= static_cast<double>(n);
  }
  if (inverse)
    for (std::size_t k = 0; k < n; ++k) out[k] *= static_cast<double>(n) / n;  // keep 1/n above
  return out;
}

// Literal "same"-length convolution sum with zero padding.
inline cvec naive_convolve_same(const cvec& x, const cvec& taps, int delay) {
  const std::ptrdiff_t len = static_cast<std::ptrdiff_t>(x.size());
  cvec out(x.size(), cplx{0.0, 0.0});
  for (std::ptrdiff_t k = 0; k < len; ++k)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(taps.size()); ++n) {
      const std::ptrdiff_t xi = k + delay - n;
      if (xi >= 0 && xi < len) out[static_cast<std::size_t>(k)] += taps[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(xi)];
    }
  return out;
}

inline double max_abs_diff(const cvec& a, const cvec& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace oracle

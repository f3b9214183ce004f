#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>

namespace sc {

/// min/max as pure arithmetic so gcc if-converts and vectorizes.
inline double arith_min(double a, double b) { return 0.5 * (a + b - std::fabs(a - b)); }
inline double arith_max(double a, double b) { return 0.5 * (a + b + std::fabs(a - b)); }

/// Branch-free exp for x in [-700, 700], relative error < 1e-14.
/// Written so the compiler can vectorize loops over arrays.
inline double fast_exp(double x) {
  constexpr double kLog2e = 1.4426950408889634074;
  constexpr double kLn2Hi = 0.693145751953125;
  constexpr double kLn2Lo = 1.42860682030941723212e-6;
  constexpr double kMagic = 6755399441055744.0;  // 1.5 * 2^52

  x = arith_min(arith_max(x, -700.0), 700.0);
  const double t = x * kLog2e + kMagic;
  const double k = t - kMagic;
  const std::int64_t ki =
      static_cast<std::int32_t>(std::bit_cast<std::int64_t>(t) & 0xffffffff);

  double r = x - k * kLn2Hi;
  r -= k * kLn2Lo;

  // Degree-11 Taylor on |r| <= ln2/2.
  double p = 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + ki) << 52);
  return p * scale;
}

/// Branch-free tanh, absolute error < 1e-14.
inline double fast_tanh(double x) {
  const double a = arith_min(std::fabs(x), 19.0);
  const double e = fast_exp(-2.0 * a);
  const double t = (1.0 - e) / (1.0 + e);
  return std::copysign(t, x);
}

inline void tanh_array(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = fast_tanh(x[i]);
}

inline void exp_array(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = fast_exp(x[i]);
}

}  // namespace sc

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace sc {

/// splitmix64-based generator. Self-contained so that streams are
/// bit-reproducible independent of the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint32_t next_below(std::uint32_t n) {
    return static_cast<std::uint32_t>((next_u64() >> 32) * n >> 32);
  }

  /// Standard normal via Box-Muller.
  double next_gaussian();

  /// Circularly-symmetric complex normal with E|z|^2 = 1.
  std::complex<double> next_cgaussian();

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and stream tags.
std::uint64_t seed_stream(std::uint64_t base, std::uint64_t tag, std::uint64_t index = 0);

}  // namespace sc

#include "sc/fft.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace sc::fft {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Plan {
  std::vector<cplx> twiddle;        // exp(-i 2 pi k / N), k < N/2
  std::vector<std::uint32_t> brev;  // bit-reversal permutation
};

const Plan& plan_for(std::size_t n) {
  static std::mutex mu;
  static std::unordered_map<std::size_t, Plan> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Plan p;
  p.twiddle.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double a = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    p.twiddle[k] = {std::cos(a), std::sin(a)};
  }
  p.brev.resize(n);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    p.brev[i] = static_cast<std::uint32_t>(r);
  }
  return cache.emplace(n, std::move(p)).first->second;
}

// Iterative radix-2 decimation-in-time. conj_twiddle selects inverse direction.
void transform(cplx* a, std::size_t n, bool conj_twiddle) {
  if (n <= 1) return;
  if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
  const Plan& p = plan_for(n);

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = p.brev[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cplx w = p.twiddle[j * step];
        if (conj_twiddle) w = std::conj(w);
        const cplx u = a[i + j];
        const cplx v = a[i + j + half] * w;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void forward(cplx* data, std::size_t n) { transform(data, n, false); }

void inverse(cplx* data, std::size_t n) {
  transform(data, n, true);
  const double s = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) data[i] *= s;
}

void forward(std::vector<cplx>& data) { forward(data.data(), data.size()); }
void inverse(std::vector<cplx>& data) { inverse(data.data(), data.size()); }

}  // namespace sc::fft

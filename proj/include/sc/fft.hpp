#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace sc::fft {

using cplx = std::complex<double>;

/// Smallest power of two >= n (n >= 1).
std::size_t next_pow2(std::size_t n);

bool is_pow2(std::size_t n);

/// In-place forward DFT, X[k] = sum_n x[n] exp(-i 2 pi k n / N).
/// N must be a power of two.
void forward(cplx* data, std::size_t n);

/// In-place inverse DFT including the 1/N factor.
void inverse(cplx* data, std::size_t n);

void forward(std::vector<cplx>& data);
void inverse(std::vector<cplx>& data);

}  // namespace sc::fft

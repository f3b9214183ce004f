#pragma once

#include <span>
#include <vector>

#include "sc/mlp.hpp"
#include "sc/signal.hpp"
#include "sc/txchain.hpp"

namespace sc {

/// Demapper network shape: (Re y, Im y) -> M logits, 64/64 ReLU hidden.
MlpSpec demapper_spec(int M);

/// Brick-wall filter at 2 f_b followed by decimation to exactly 2 samples
/// per symbol. The input rate must be an even integer multiple of 2 f_b.
ComplexSignal adc(const ComplexSignal& x);

/// RRC matched filter at 2 samples per symbol, center-aligned so the
/// cascade introduces no net delay.
ComplexSignal matched_filter(const ComplexSignal& y, double rolloff, int span = 32);

/// Symbol-rate sampling at the delay-compensated phase; `guard` symbols are
/// discarded at both frame ends.
cvec symbol_sample(const ComplexSignal& z, int total_delay, int guard);

/// Softmax posteriors of the demapper network; returns n x M row-major
/// probabilities.
std::vector<double> demap_nn_probs(std::span<const cplx> y, std::span<const double> theta4,
                                   int M);

/// argmax decisions (ties toward the smallest index).
std::vector<int> demap_nn(std::span<const cplx> y, std::span<const double> theta4, int M);

/// Minimum-distance decisions against a constellation table.
std::vector<int> demap_mindist(std::span<const cplx> y, const ConstellationTable& table);

struct SerResult {
  double ser = 0.0;
  long n_errors = 0;
  long n_symbols = 0;
  double ci95 = 0.0;
};

SerResult ser(std::span<const int> tx, std::span<const int> rx);

/// Analytic symbol error rate of square M-QAM on AWGN at symbol SNR
/// gamma = Es/N0 (linear). The independent oracle for chain calibration.
double qam_ser_analytic(int M, double gamma);

}  // namespace sc

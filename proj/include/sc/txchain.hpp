#pragma once

#include <filesystem>
#include <span>
#include <utility>

#include "sc/mlp.hpp"
#include "sc/signal.hpp"

namespace sc {

/// M constellation points with unit average power under a uniform prior.
struct ConstellationTable {
  cvec points;

  int M() const { return static_cast<int>(points.size()); }
};

/// Scalar pre-distorter network shape shared by both rails: 1 -> 16 -> 16 -> 1,
/// tanh hidden activations, linear output.
MlpSpec predistorter_spec();

/// Normalizes a raw point table to unit average power.
ConstellationTable normalize_table(std::span<const cplx> raw);

/// x_k = normalized-table lookup. Messages are 0-based, in [0, M).
cvec map_messages(std::span<const int> messages, std::span<const cplx> raw_points);

/// VJP of map_messages through the lookup and the power normalization.
/// d_raw is interleaved (re, im), accumulated (+=).
void map_messages_backward(std::span<const int> messages, std::span<const cplx> raw_points,
                           std::span<const cplx> d_symbols, std::span<double> d_raw);

/// convolve(upsample(x, os), theta2).
ComplexSignal pulse_shape(std::span<const cplx> symbols, const FirFilter& theta2, int os);

/// s' = s / max{max|Re s|, max|Im s|}. Returns the normalized signal and the
/// scale. Throws on an all-zero frame.
std::pair<ComplexSignal, double> peak_normalize(const ComplexSignal& s);

/// Per-rail scalar MLP pre-distorter followed by a hard clip to [-1, 1].
ComplexSignal predistort_nn(const ComplexSignal& s_prime, std::span<const double> theta3);

/// Per-rail u -> sign(u) * min(v_clip, (2/pi) * asin(|u|)). Rails must be in
/// [-1, 1].
ComplexSignal arcsin_dpd(const ComplexSignal& s_prime, double v_clip);

/// Rail-wise kernels shared with the fused pipeline. n is the rail count
/// (2 per complex sample); buffers are interleaved rails.
void arcsin_dpd_rails(const double* u, double* out, std::size_t n, double v_clip);
void clip_rails(double* u, std::size_t n);

/// Constellation import/export: rows of message_index,i,q (0-based indices).
void save_constellation_csv(const ConstellationTable& t, const std::filesystem::path& path);
ConstellationTable load_constellation_csv(const std::filesystem::path& path);

/// Square M-QAM (M a perfect even square), unit average power, row-major
/// Gray-free indexing. Used as the shaping-oracle reference and as the
/// initial table for constellation training.
ConstellationTable square_qam(int M);

}  // namespace sc

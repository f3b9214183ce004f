#pragma once

#include <memory>

#include "sc/chain.hpp"
#include "sc/gradcore.hpp"

namespace sc {

/// A gradient-check case: a block plus the operating point it is checked at.
struct CheckCase {
  std::unique_ptr<DiffBlock> block;
  std::vector<double> input;
  std::vector<double> params;
  double fd_step = 1e-5;
  double tol = 1e-4;
};

/// One case per chain block (mapper+normalization, FIR convolution, peak
/// normalization, pre-distorter MLP, hard clip, PA, IQM sine, multiplex,
/// fixed-noise AWGN, brick-wall, ADC, matched filter, symbol sampling,
/// demapper softmax cross-entropy), each at a seeded random operating point.
std::vector<CheckCase> make_block_check_cases(std::uint64_t seed);

/// Composed end-to-end loss cases, one per parameter segment, run on a small
/// frame with fixed noise and straight-through (frozen) normalization scales.
/// base must hold the full chain parameters; theta3's output layer is backed
/// off the clip boundary so the finite differences stay on one side of the
/// kink.
std::vector<CheckCase> make_endtoend_check_cases(const SystemParams& sys,
                                                 const ChannelConfig& ch,
                                                 const Calibration& cal,
                                                 const ParamVector& base,
                                                 std::uint64_t seed);

}  // namespace sc

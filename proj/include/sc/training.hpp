#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sc/chain.hpp"

namespace sc {

struct TrainConfig {
  int batch_symbols = 4096;     // payload symbols per training frame
  int iterations = 20000;       // joint optimization steps
  int pretrain_iterations = 5000;  // per pre-training stage
  double lr = 1e-3;
  double lr_drop_frac = 0.8;    // step at which lr is scaled
  double lr_drop_factor = 0.1;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t seed = 1;
  /// Trainable flags indexed by segment (theta1..theta4).
  std::array<bool, 4> trainable = {true, true, true, true};
};

struct TrainResult {
  ParamVector params;
  std::vector<double> loss_trace;
  /// 500-iteration moving average non-increasing over the final quarter
  /// (within 0.1% slack) -- convergence sanity, not a hard gate.
  bool converged = true;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(int iteration, ParamVector snapshot)
      : std::runtime_error("training diverged at iteration " + std::to_string(iteration)),
        iteration(iteration),
        snapshot(std::move(snapshot)) {}
  int iteration;
  ParamVector snapshot;
};

class PretrainFailure : public std::runtime_error {
 public:
  PretrainFailure(const std::string& block, const std::string& why)
      : std::runtime_error("pre-training failed for " + block + ": " + why), block(block) {}
  std::string block;
};

/// Monte-Carlo cross-entropy: -(1/n) sum log q[k][m_k], probabilities clamped
/// at 1e-12. q is n x M row-major.
double ce_loss(std::span<const double> q, std::span<const int> labels, int M);

/// Fused stable softmax + cross-entropy on logits; writes dL/dlogits.
double ce_from_logits(std::span<const double> logits, std::span<const int> labels, int M,
                      std::span<double> dlogits);

/// Initial table for constellation training: the square lattice when M is a
/// perfect square, antipodal for M = 2.
ConstellationTable initial_table(int M);

/// Trains mapper + demapper on the memoryless AWGN channel at snr_db
/// (unit-power symbols, Es/N0 = 10^(snr/10)) and returns the shaped table.
ConstellationTable train_baseline_constellation(double snr_db, int M, std::uint64_t seed,
                                                const TrainConfig& cfg);

/// Initializes every network to mimic its conventional counterpart:
/// theta1 <- baseline table (copy), theta2 <- RRC taps (copy), theta3 <-
/// regression fit of the clipped-arcsin pre-distorter, theta4 <- trained on
/// the linearized symbol channel until its decisions agree with
/// minimum-distance demapping. Throws PretrainFailure naming the block if a
/// target is unmet within its budget.
ParamVector pretrain_all(const SystemParams& sys, const Calibration& cal,
                         const ConstellationTable& baseline_table, const TrainConfig& cfg,
                         double v_clip = 1.0);

/// Joint end-to-end optimization through the full multi-channel chain with
/// center-channel demapping; fresh messages and noise every batch.
TrainResult train_joint(const ParamVector& init, const TrainConfig& cfg,
                        const SystemParams& sys, const ChannelConfig& ch,
                        const Calibration& cal);

struct AblationStage {
  std::string label;
  SerResult result;
  ParamVector params;
};

/// Cumulative unfreeze study: stage 0 evaluates the frozen pre-trained chain;
/// each later stage unfreezes one more segment (default order NN4, NN2, NN3,
/// NN1), retrains from the pre-trained init, and evaluates on a fixed seed.
std::vector<AblationStage> ablation_run(const ParamVector& pretrained, const TrainConfig& cfg,
                                        const SystemParams& sys, const ChannelConfig& ch,
                                        const Calibration& cal, const EvalConfig& eval_cfg,
                                        const std::vector<Seg>& order = {Seg::theta4, Seg::theta2,
                                                                         Seg::theta3, Seg::theta1});

}  // namespace sc

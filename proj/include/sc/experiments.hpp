#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sc/chain.hpp"
#include "sc/csvplot.hpp"
#include "sc/training.hpp"

namespace sc {

enum class ExperimentKind {
  VpSweep,
  FreqResponse,
  GuardbandSweep,
  Ablation,
  BaselineConstellation,
  SingleEval,
};

struct SweepConfig {
  std::vector<double> v_p_grid = {0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
  std::vector<double> eta_grid = {0.0, 0.025, 0.05, 0.1, 0.15, 0.2, 0.3};
  std::vector<double> baseline_v_clip_grid = {0.80, 0.85, 0.90, 0.95, 1.00};
  std::vector<double> baseline_v_p_grid = {0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
  // Reduced budget used while grid-searching the baseline knobs.
  int search_target_errors = 100;
  int search_max_frames = 4;
};

struct PathsConfig {
  std::string constellation_csv;
  std::string init_checkpoint;
  std::string checkpoint_single;  // single-channel-trained model (freqresp)
  std::string checkpoint_multi;   // 3-channel-trained model (freqresp)
};

struct ExperimentConfig {
  SystemParams sys;
  ChannelConfig ch;
  TrainConfig train;
  EvalConfig eval;
  SweepConfig sweep;
  PathsConfig paths;
  std::string run_id;  // derived from kind + seed when empty
  std::string out_dir = "results";
  std::uint64_t seed = 1;
  int workers = 1;
};

/// One CSV row; the stable result schema shared by every sweep:
/// run_id, scheme, eta, rolloff, v_p, v_clip, ser, ci95, n_symbols,
/// checkpoint, seconds.
struct ResultRecord {
  std::string run_id;
  std::string scheme;  // baseline | baseline_no_dpd | ae | ablation stage | baseline_single
  double eta = 0.0;
  double rolloff = 0.0;
  double v_p = 1.0;
  double v_clip = 1.0;
  double ser = 0.0;
  double ci95 = 0.0;
  long n_symbols = 0;
  std::string checkpoint;
  double seconds = 0.0;

  std::vector<std::string> to_row() const;
  static std::vector<std::string> header();
};

void write_result_csv(const std::filesystem::path& path,
                      const std::vector<ResultRecord>& rows);

/// Assembles the chain parameters of the conventional baseline: theta1 = the
/// geometric table, theta2 = the RRC pulse shaper. theta3/theta4 stay zero
/// (the baseline uses closed-form DPD and minimum-distance demapping).
ParamVector baseline_params(const SystemParams& sys, const ConstellationTable& table);

struct BaselineOpt {
  double v_p = 1.0;
  double v_clip = 1.0;
  SerResult result;
};

/// Grid-optimizes (v_clip, v_p) of the baseline-with-DPD scheme at one
/// operating point, common random numbers across combos, then re-evaluates
/// the winner at the full budget.
BaselineOpt optimize_baseline(const SystemParams& sys, ChannelConfig ch, const Calibration& cal,
                              const ParamVector& bparams, const SweepConfig& sweep,
                              const EvalConfig& full_eval, bool sweep_v_p);

struct SweepOutput {
  std::vector<ResultRecord> rows;
  std::filesystem::path csv_path;
  std::filesystem::path svg_path;
};

SweepOutput run_vp_sweep(const ExperimentConfig& cfg);
SweepOutput run_freq_response(const ExperimentConfig& cfg);

struct GuardbandOutput {
  std::vector<ResultRecord> rows;
  std::filesystem::path csv_path;
  std::filesystem::path svg_path;
  // Guard-band-reduction metric: smallest (interpolated) eta at which each
  // scheme reaches the saturated-baseline SER threshold.
  double eta_star_ae = 0.0;
  double eta_star_baseline = 0.0;
  double reduction = 0.0;  // 1 - eta_star_ae / eta_star_baseline
  bool reduction_valid = false;
};

GuardbandOutput run_guardband_sweep(const ExperimentConfig& cfg);
SweepOutput run_ablation(const ExperimentConfig& cfg);

/// Trains and writes the baseline geometric constellation CSV.
std::filesystem::path run_baseline_constellation(const ExperimentConfig& cfg);

/// The guard-band-reduction metric on (eta, ser) curves: threshold is 1.05x
/// the baseline SER at the largest swept eta; crossings are interpolated
/// linearly on (eta, log ser).
std::optional<double> eta_crossing(const std::vector<std::pair<double, double>>& curve,
                                   double threshold);

}  // namespace sc

// Command-line front end for the superchannel transceiver simulator.
//
// Subcommands: pretrain, train, eval, vp-sweep, freqresp, guardband,
// ablation, baseline-constellation. Exit codes: 0 success, 2 configuration
// error, 3 training/pre-training failure, 4 self-check failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sc/configfile.hpp"
#include "sc/csvplot.hpp"
#include "sc/experiments.hpp"
#include "sc/rng.hpp"
#include "sc/training.hpp"

namespace fs = std::filesystem;
using namespace sc;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config_path, "Configuration file")->required();
  cmd->add_option("--out", a.out_dir, "Output directory (overrides [run] out_dir)");
  cmd->add_option("--seed", a.seed, "Run seed (overrides [run] seed)")
      ->each([&](const std::string&) { a.seed_set = true; });
  cmd->add_option("--workers", a.workers, "Sweep worker threads (overrides [run] workers)");
}

ExperimentConfig load_config(const CommonArgs& a) {
  ExperimentConfig cfg = parse_config_file(a.config_path);
  if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
  if (a.seed_set) cfg.seed = a.seed;
  if (a.workers > 0) cfg.workers = a.workers;
  return cfg;
}

int vp_self_check(const std::vector<ResultRecord>& rows) {
  // The run itself verifies: without DPD is never better than with DPD in
  // the compression region (V_p >= 0.7), within combined confidence slack.
  for (const auto& a : rows) {
    if (a.scheme != "baseline" || a.v_p < 0.7 || std::isnan(a.ser)) continue;
    for (const auto& b : rows) {
      if (b.scheme != "baseline_no_dpd" || b.v_p != a.v_p || std::isnan(b.ser)) continue;
      if (b.ser + 2.0 * (a.ci95 + b.ci95) < a.ser) {
        std::cerr << "self-check failed: no-DPD baseline better than DPD baseline at V_p="
                  << a.v_p << "\n";
        return 4;
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superchannel transceiver simulator and end-to-end trainer"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string eval_scheme = "ae";
  std::string checkpoint_path;

  CLI::App* c_pretrain = app.add_subcommand("pretrain", "Initialize NNs from their conventional counterparts");
  CLI::App* c_train = app.add_subcommand("train", "Joint end-to-end training from a checkpoint");
  CLI::App* c_eval = app.add_subcommand("eval", "Evaluate SER of one scheme at one operating point");
  CLI::App* c_vp = app.add_subcommand("vp-sweep", "SER vs V_p, single channel");
  CLI::App* c_fr = app.add_subcommand("freqresp", "Learned pulse-shaper frequency responses");
  CLI::App* c_gb = app.add_subcommand("guardband", "SER vs guard band, multi-channel");
  CLI::App* c_ab = app.add_subcommand("ablation", "Cumulative unfreeze study");
  CLI::App* c_bc = app.add_subcommand("baseline-constellation", "Train the baseline geometric constellation");
  for (CLI::App* c : {c_pretrain, c_train, c_eval, c_vp, c_fr, c_gb, c_ab, c_bc})
    add_common(c, args);
  c_eval->add_option("--scheme", eval_scheme, "ae | baseline | baseline_no_dpd")
      ->check(CLI::IsMember({"ae", "baseline", "baseline_no_dpd"}));
  c_eval->add_option("--checkpoint", checkpoint_path, "Parameter checkpoint for the ae scheme");

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = load_config(args);

    if (c_pretrain->parsed()) {
      ExperimentConfig c = cfg;
      if (c.run_id.empty()) c.run_id = "pretrain-s" + std::to_string(c.seed);
      const fs::path dir = fs::path(c.out_dir) / c.run_id;
      fs::create_directories(dir);
      if (c.paths.constellation_csv.empty())
        throw ConfigError("pretrain: paths.constellation_csv is required");
      const ConstellationTable table = load_constellation_csv(c.paths.constellation_csv);
      const Calibration cal = calibrate(c.sys, c.ch.snr_db, table);
      TrainConfig tc = c.train;
      tc.seed = seed_stream(c.seed, 0x9E);
      const ParamVector p = pretrain_all(c.sys, cal, table, tc);
      const fs::path out = dir / "pretrained.json";
      save_checkpoint(p, out);
      std::cout << "pretrained checkpoint: " << out.string() << "\n";
      return 0;
    }

    if (c_train->parsed()) {
      ExperimentConfig c = cfg;
      if (c.run_id.empty()) c.run_id = "train-s" + std::to_string(c.seed);
      const fs::path dir = fs::path(c.out_dir) / c.run_id;
      fs::create_directories(dir);
      if (c.paths.init_checkpoint.empty())
        throw ConfigError("train: paths.init_checkpoint is required");
      if (c.paths.constellation_csv.empty())
        throw ConfigError("train: paths.constellation_csv is required");
      const ConstellationTable table = load_constellation_csv(c.paths.constellation_csv);
      const Calibration cal = calibrate(c.sys, c.ch.snr_db, table);
      const ParamVector init = load_checkpoint(c.paths.init_checkpoint);
      TrainConfig tc = c.train;
      tc.seed = seed_stream(c.seed, 0x77);
      const TrainResult tr = train_joint(init, tc, c.sys, c.ch, cal);
      const fs::path out = dir / "trained.json";
      save_checkpoint(tr.params, out);
      std::vector<std::vector<std::string>> rows;
      for (std::size_t i = 0; i < tr.loss_trace.size(); ++i)
        rows.push_back({std::to_string(i), fmt_num(tr.loss_trace[i])});
      write_csv(dir / "loss_trace.csv", {"iteration", "loss"}, rows);
      std::cout << "trained checkpoint: " << out.string() << "\n";
      if (!tr.converged)
        std::cerr << "warning: loss moving average not non-increasing over the final quarter\n";
      return 0;
    }

    if (c_eval->parsed()) {
      ExperimentConfig c = cfg;
      if (c.run_id.empty()) c.run_id = "eval-s" + std::to_string(c.seed);
      const fs::path dir = fs::path(c.out_dir) / c.run_id;
      fs::create_directories(dir);
      const ConstellationTable table = load_constellation_csv(c.paths.constellation_csv);
      const Calibration cal = calibrate(c.sys, c.ch.snr_db, table);
      EvalConfig ev = c.eval;
      ev.seed = seed_stream(c.seed, 0xEEE);
      SerResult r;
      if (eval_scheme == "ae") {
        const std::string ck = !checkpoint_path.empty() ? checkpoint_path
                                                        : c.paths.init_checkpoint;
        if (ck.empty()) throw ConfigError("eval: --checkpoint required for the ae scheme");
        const ParamVector p = load_checkpoint(ck);
        r = eval_ser(c.sys, c.ch, cal, p, DpdMode::NeuralNet, DemapKind::NeuralNet, ev);
      } else {
        const ParamVector p = baseline_params(c.sys, table);
        const DpdMode dpd = eval_scheme == "baseline" ? DpdMode::ArcsinClip : DpdMode::None;
        r = eval_ser(c.sys, c.ch, cal, p, dpd, DemapKind::MinDist, ev);
      }
      ResultRecord rec{c.run_id, eval_scheme, c.ch.eta, c.sys.rolloff, c.ch.v_p, c.ch.v_clip,
                       r.ser, r.ci95, r.n_symbols, checkpoint_path, 0.0};
      write_result_csv(dir / "eval.csv", {rec});
      std::cout << "scheme=" << eval_scheme << " ser=" << fmt_num(r.ser)
                << " ci95=" << fmt_num(r.ci95) << " n=" << r.n_symbols << "\n";
      return 0;
    }

    if (c_vp->parsed()) {
      const SweepOutput out = run_vp_sweep(cfg);
      std::cout << "wrote " << out.csv_path.string() << "\n";
      return vp_self_check(out.rows);
    }
    if (c_fr->parsed()) {
      const SweepOutput out = run_freq_response(cfg);
      std::cout << "wrote " << out.csv_path.string() << "\n";
      return 0;
    }
    if (c_gb->parsed()) {
      const GuardbandOutput out = run_guardband_sweep(cfg);
      std::cout << "wrote " << out.csv_path.string() << "\n";
      if (out.reduction_valid)
        std::cout << "guard-band reduction: " << fmt_num(100.0 * out.reduction)
                  << "% (eta* ae=" << fmt_num(out.eta_star_ae)
                  << ", baseline=" << fmt_num(out.eta_star_baseline) << ")\n";
      return 0;
    }
    if (c_ab->parsed()) {
      const SweepOutput out = run_ablation(cfg);
      std::cout << "wrote " << out.csv_path.string() << "\n";
      return 0;
    }
    if (c_bc->parsed()) {
      const fs::path out = run_baseline_constellation(cfg);
      std::cout << "wrote " << out.string() << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const PretrainFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

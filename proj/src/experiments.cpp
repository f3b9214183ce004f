#include "sc/experiments.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <thread>

#include "sc/configfile.hpp"
#include "sc/rng.hpp"

namespace sc {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed_s(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string grid_tag(double v) {
  std::string s = fmt_num(v);
  for (char& c : s)
    if (c == '.') c = 'p';
  return s;
}

/// Ordered work queue: tasks run on `workers` threads, results land in
/// pre-assigned slots so output order never depends on scheduling.
void run_tasks(int workers, std::vector<std::function<void()>>& tasks) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      tasks[i]();
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t + 1 < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

ResultRecord error_record(const ExperimentConfig& cfg, const std::string& scheme, double eta,
                          double v_p, const std::string& what) {
  ResultRecord r;
  r.run_id = cfg.run_id;
  r.scheme = scheme;
  r.eta = eta;
  r.rolloff = cfg.sys.rolloff;
  r.v_p = v_p;
  r.v_clip = std::nan("");
  r.ser = std::nan("");
  r.ci95 = std::nan("");
  r.n_symbols = 0;
  r.checkpoint = "error: " + what;
  return r;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  const fs::path dir = fs::path(cfg.out_dir) / cfg.run_id;
  fs::create_directories(dir);
  return dir;
}

std::string default_run_id(const char* kind, std::uint64_t seed) {
  return std::string(kind) + "-s" + std::to_string(seed);
}

ConstellationTable load_table_or_throw(const ExperimentConfig& cfg) {
  if (cfg.paths.constellation_csv.empty())
    throw ConfigError("config: paths.constellation_csv is required for this experiment");
  return load_constellation_csv(cfg.paths.constellation_csv);
}

ParamVector load_init_or_throw(const ExperimentConfig& cfg) {
  if (cfg.paths.init_checkpoint.empty())
    throw ConfigError("config: paths.init_checkpoint is required for this experiment");
  return load_checkpoint(cfg.paths.init_checkpoint);
}

}  // namespace

std::vector<std::string> ResultRecord::header() {
  return {"run_id", "scheme", "eta",        "rolloff",    "v_p",    "v_clip",
          "ser",    "ci95",   "n_symbols",  "checkpoint", "seconds"};
}

std::vector<std::string> ResultRecord::to_row() const {
  return {run_id,          scheme,        fmt_num(eta),  fmt_num(rolloff),
          fmt_num(v_p),    fmt_num(v_clip), fmt_num(ser), fmt_num(ci95),
          std::to_string(n_symbols), checkpoint, fmt_num(seconds)};
}

void write_result_csv(const std::filesystem::path& path,
                      const std::vector<ResultRecord>& rows) {
  std::vector<std::vector<std::string>> r;
  r.reserve(rows.size());
  for (const auto& row : rows) r.push_back(row.to_row());
  write_csv(path, ResultRecord::header(), r);
}

ParamVector baseline_params(const SystemParams& sys, const ConstellationTable& table) {
  ParamVector p = make_chain_params(sys);
  auto t1 = p.seg(Seg::theta1);
  for (int m = 0; m < sys.M; ++m) {
    t1[2 * static_cast<std::size_t>(m)] = table.points[static_cast<std::size_t>(m)].real();
    t1[2 * static_cast<std::size_t>(m) + 1] = table.points[static_cast<std::size_t>(m)].imag();
  }
  const FirFilter rrc = rrc_taps(sys.rolloff, sys.span, sys.os);
  auto t2 = p.seg(Seg::theta2);
  for (std::size_t j = 0; j < rrc.taps.size(); ++j) {
    t2[2 * j] = rrc.taps[j].real();
    t2[2 * j + 1] = rrc.taps[j].imag();
  }
  return p;
}

BaselineOpt optimize_baseline(const SystemParams& sys, ChannelConfig ch, const Calibration& cal,
                              const ParamVector& bparams, const SweepConfig& sweep,
                              const EvalConfig& full_eval, bool sweep_v_p) {
  EvalConfig quick = full_eval;
  quick.target_errors = sweep.search_target_errors;
  quick.max_frames = sweep.search_max_frames;
  quick.seed = seed_stream(full_eval.seed, 0xB5);

  const std::vector<double> vps = sweep_v_p ? sweep.baseline_v_p_grid
                                            : std::vector<double>{ch.v_p};
  BaselineOpt best;
  double best_ser = 2.0;
  for (const double vp : vps) {
    for (const double vc : sweep.baseline_v_clip_grid) {
      ChannelConfig c = ch;
      c.v_p = vp;
      c.v_clip = vc;
      const SerResult r = eval_ser(sys, c, cal, bparams, DpdMode::ArcsinClip,
                                   DemapKind::MinDist, quick);
      if (r.ser < best_ser) {
        best_ser = r.ser;
        best.v_p = vp;
        best.v_clip = vc;
      }
    }
  }
  ChannelConfig c = ch;
  c.v_p = best.v_p;
  c.v_clip = best.v_clip;
  best.result = eval_ser(sys, c, cal, bparams, DpdMode::ArcsinClip, DemapKind::MinDist,
                         full_eval);
  return best;
}

std::optional<double> eta_crossing(const std::vector<std::pair<double, double>>& curve,
                                   double threshold) {
  if (curve.empty()) return std::nullopt;
  auto logs = [](double v) { return std::log(std::max(v, 1e-12)); };
  if (curve.front().second <= threshold) return curve.front().first;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    const auto [e0, s0] = curve[i];
    const auto [e1, s1] = curve[i + 1];
    if (s0 > threshold && s1 <= threshold) {
      const double t = (logs(threshold) - logs(s0)) / (logs(s1) - logs(s0));
      return e0 + t * (e1 - e0);
    }
  }
  return std::nullopt;
}

SweepOutput run_vp_sweep(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.run_id.empty()) cfg.run_id = default_run_id("vp", cfg.seed);
  if (cfg.ch.n_channels != 1)
    throw ConfigError("vp-sweep: single-channel configuration required");
  const fs::path dir = ensure_out_dir(cfg);
  const ConstellationTable table = load_table_or_throw(cfg);
  const ParamVector init = load_init_or_throw(cfg);
  const Calibration cal = calibrate(cfg.sys, cfg.ch.snr_db, table);
  const ParamVector bparams = baseline_params(cfg.sys, table);

  EvalConfig ev = cfg.eval;
  ev.seed = seed_stream(cfg.seed, 0xEEE);

  const std::size_t np = cfg.sweep.v_p_grid.size();
  std::vector<std::vector<ResultRecord>> per_point(np);
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < np; ++i) {
    tasks.emplace_back([&, i] {
      const double vp = cfg.sweep.v_p_grid[i];
      auto& out = per_point[i];
      // Trained autoencoder at this drive.
      try {
        const auto t0 = Clock::now();
        ChannelConfig ch = cfg.ch;
        ch.v_p = vp;
        ch.v_clip = 1.0;
        TrainConfig tc = cfg.train;
        tc.seed = seed_stream(cfg.seed, 0xAE, i);
        const TrainResult tr = train_joint(init, tc, cfg.sys, ch, cal);
        const SerResult r = eval_ser(cfg.sys, ch, cal, tr.params, DpdMode::NeuralNet,
                                     DemapKind::NeuralNet, ev);
        const fs::path ckpt = dir / ("ae_vp" + grid_tag(vp) + ".json");
        save_checkpoint(tr.params, ckpt);
        ResultRecord rec{cfg.run_id, "ae", 0.0, cfg.sys.rolloff, vp, 1.0,
                         r.ser,      r.ci95, r.n_symbols, ckpt.string(), elapsed_s(t0)};
        out.push_back(rec);
      } catch (const std::exception& e) {
        out.push_back(error_record(cfg, "ae", 0.0, vp, e.what()));
      }
      // Baseline with DPD, V_clip optimized at this V_p.
      try {
        const auto t0 = Clock::now();
        ChannelConfig ch = cfg.ch;
        ch.v_p = vp;
        const BaselineOpt b = optimize_baseline(cfg.sys, ch, cal, bparams, cfg.sweep, ev, false);
        out.push_back({cfg.run_id, "baseline", 0.0, cfg.sys.rolloff, vp, b.v_clip, b.result.ser,
                       b.result.ci95, b.result.n_symbols, "", elapsed_s(t0)});
      } catch (const std::exception& e) {
        out.push_back(error_record(cfg, "baseline", 0.0, vp, e.what()));
      }
      // Baseline without DPD.
      try {
        const auto t0 = Clock::now();
        ChannelConfig ch = cfg.ch;
        ch.v_p = vp;
        const SerResult r = eval_ser(cfg.sys, ch, cal, bparams, DpdMode::None,
                                     DemapKind::MinDist, ev);
        out.push_back({cfg.run_id, "baseline_no_dpd", 0.0, cfg.sys.rolloff, vp, 1.0, r.ser,
                       r.ci95, r.n_symbols, "", elapsed_s(t0)});
      } catch (const std::exception& e) {
        out.push_back(error_record(cfg, "baseline_no_dpd", 0.0, vp, e.what()));
      }
    });
  }
  run_tasks(cfg.workers, tasks);

  SweepOutput res;
  for (auto& v : per_point)
    for (auto& r : v) res.rows.push_back(std::move(r));

  res.csv_path = dir / "vp_sweep.csv";
  write_result_csv(res.csv_path, res.rows);

  PlotOptions po;
  po.title = "SER vs V_p (single channel, rolloff " + fmt_num(cfg.sys.rolloff) + ")";
  po.xlabel = "V_p";
  po.ylabel = "SER";
  po.log_y = true;
  po.y_floor = 1e-6;
  std::vector<Series> series(3);
  series[0] = {"ae", {}, "#d62728", false};
  series[1] = {"baseline", {}, "#1f77b4", false};
  series[2] = {"baseline_no_dpd", {}, "#7f7f7f", true};
  for (const auto& r : res.rows) {
    if (std::isnan(r.ser)) continue;
    for (auto& s : series)
      if (s.label == r.scheme) s.pts.emplace_back(r.v_p, std::max(r.ser, 1e-7));
  }
  res.svg_path = dir / "vp_sweep.svg";
  write_svg_plot(res.svg_path, po, series);
  return res;
}

SweepOutput run_freq_response(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.run_id.empty()) cfg.run_id = default_run_id("freqresp", cfg.seed);
  const fs::path dir = ensure_out_dir(cfg);
  if (cfg.paths.checkpoint_single.empty() || cfg.paths.checkpoint_multi.empty())
    throw ConfigError("freqresp: checkpoint_single and checkpoint_multi are required");

  auto taps_of = [&](const fs::path& p) {
    const ParamVector pv = load_checkpoint(p);
    const auto t2 = pv.seg(Seg::theta2);
    FirFilter f;
    f.taps.resize(t2.size() / 2);
    for (std::size_t j = 0; j < f.taps.size(); ++j) f.taps[j] = cplx{t2[2 * j], t2[2 * j + 1]};
    f.delay = static_cast<int>(f.taps.size() - 1) / 2;
    return f;
  };

  const std::size_t n_fft = 4096;
  const double floor_db = -80.0;
  struct Curve {
    std::string name;
    std::vector<SpectrumPoint> pts;
  };
  std::vector<Curve> curves;
  curves.push_back({"rrc_reference",
                    power_spectrum(rrc_taps(cfg.sys.rolloff, cfg.sys.span, cfg.sys.os), n_fft,
                                   cfg.sys.os)});
  curves.push_back({"learned_single_channel",
                    power_spectrum(taps_of(cfg.paths.checkpoint_single), n_fft, cfg.sys.os)});
  curves.push_back({"learned_multi_channel",
                    power_spectrum(taps_of(cfg.paths.checkpoint_multi), n_fft, cfg.sys.os)});

  std::vector<std::vector<std::string>> rows;
  for (const auto& c : curves)
    for (const auto& p : c.pts)
      rows.push_back({c.name, fmt_num(p.freq), fmt_num(std::max(p.magnitude_db, floor_db))});

  SweepOutput res;
  res.csv_path = dir / "freq_response.csv";
  write_csv(res.csv_path, {"filter", "freq", "magnitude_db"}, rows);

  PlotOptions po;
  po.title = "Pulse-shaper frequency response";
  po.xlabel = "f / f_b";
  po.ylabel = "magnitude (dB)";
  std::vector<Series> series;
  const char* colors[3] = {"#1f77b4", "#d62728", "#2ca02c"};
  for (std::size_t i = 0; i < curves.size(); ++i) {
    Series s;
    s.label = curves[i].name;
    s.color = colors[i % 3];
    s.dashed = (i == 0);
    for (const auto& p : curves[i].pts)
      if (std::fabs(p.freq) <= 2.0)
        s.pts.emplace_back(p.freq, std::max(p.magnitude_db, floor_db));
    series.push_back(std::move(s));
  }
  res.svg_path = dir / "freq_response.svg";
  write_svg_plot(res.svg_path, po, series);
  return res;
}

GuardbandOutput run_guardband_sweep(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.run_id.empty()) cfg.run_id = default_run_id("gb", cfg.seed);
  if (cfg.ch.n_channels < 3)
    throw ConfigError("guardband: multi-channel configuration required");
  if (cfg.sweep.eta_grid.empty()) throw ConfigError("guardband: empty eta grid");
  const fs::path dir = ensure_out_dir(cfg);
  const ConstellationTable table = load_table_or_throw(cfg);
  const ParamVector init = load_init_or_throw(cfg);
  const Calibration cal = calibrate(cfg.sys, cfg.ch.snr_db, table);
  const ParamVector bparams = baseline_params(cfg.sys, table);

  EvalConfig ev = cfg.eval;
  ev.seed = seed_stream(cfg.seed, 0xEEE);

  const std::size_t np = cfg.sweep.eta_grid.size();
  std::vector<std::vector<ResultRecord>> per_point(np + 1);
  std::vector<std::function<void()>> tasks;

  // Single-channel baseline reference floor.
  tasks.emplace_back([&] {
    try {
      const auto t0 = Clock::now();
      ChannelConfig ch1 = cfg.ch;
      ch1.n_channels = 1;
      const BaselineOpt b = optimize_baseline(cfg.sys, ch1, cal, bparams, cfg.sweep, ev, true);
      per_point[np].push_back({cfg.run_id, "baseline_single", std::nan(""), cfg.sys.rolloff,
                               b.v_p, b.v_clip, b.result.ser, b.result.ci95, b.result.n_symbols,
                               "", elapsed_s(t0)});
    } catch (const std::exception& e) {
      per_point[np].push_back(error_record(cfg, "baseline_single", std::nan(""), 0.0, e.what()));
    }
  });

  for (std::size_t i = 0; i < np; ++i) {
    tasks.emplace_back([&, i] {
      const double eta = cfg.sweep.eta_grid[i];
      auto& out = per_point[i];
      try {
        const auto t0 = Clock::now();
        ChannelConfig ch = cfg.ch;
        ch.eta = eta;
        ch.v_p = 1.0;  // the learned scheme runs at full drive
        ch.v_clip = 1.0;
        TrainConfig tc = cfg.train;
        tc.seed = seed_stream(cfg.seed, 0x6B, i);
        const TrainResult tr = train_joint(init, tc, cfg.sys, ch, cal);
        const SerResult r = eval_ser(cfg.sys, ch, cal, tr.params, DpdMode::NeuralNet,
                                     DemapKind::NeuralNet, ev);
        const fs::path ckpt = dir / ("ae_eta" + grid_tag(eta) + ".json");
        save_checkpoint(tr.params, ckpt);
        out.push_back({cfg.run_id, "ae", eta, cfg.sys.rolloff, 1.0, 1.0, r.ser, r.ci95,
                       r.n_symbols, ckpt.string(), elapsed_s(t0)});
      } catch (const std::exception& e) {
        out.push_back(error_record(cfg, "ae", eta, 1.0, e.what()));
      }
      try {
        const auto t0 = Clock::now();
        ChannelConfig ch = cfg.ch;
        ch.eta = eta;
        const BaselineOpt b = optimize_baseline(cfg.sys, ch, cal, bparams, cfg.sweep, ev, true);
        out.push_back({cfg.run_id, "baseline", eta, cfg.sys.rolloff, b.v_p, b.v_clip,
                       b.result.ser, b.result.ci95, b.result.n_symbols, "", elapsed_s(t0)});
      } catch (const std::exception& e) {
        out.push_back(error_record(cfg, "baseline", eta, 0.0, e.what()));
      }
    });
  }
  run_tasks(cfg.workers, tasks);

  GuardbandOutput res;
  for (auto& v : per_point)
    for (auto& r : v) res.rows.push_back(std::move(r));

  res.csv_path = dir / "guardband.csv";
  write_result_csv(res.csv_path, res.rows);

  // Reduction metric on the assembled curves.
  std::vector<std::pair<double, double>> ae_curve, base_curve;
  for (const auto& r : res.rows) {
    if (std::isnan(r.ser) || std::isnan(r.eta)) continue;
    if (r.scheme == "ae") ae_curve.emplace_back(r.eta, r.ser);
    if (r.scheme == "baseline") base_curve.emplace_back(r.eta, r.ser);
  }
  if (!base_curve.empty() && !ae_curve.empty()) {
    const double threshold = 1.05 * base_curve.back().second;
    const auto ae_star = eta_crossing(ae_curve, threshold);
    const auto base_star = eta_crossing(base_curve, threshold);
    if (ae_star && base_star && *base_star > 0.0) {
      res.eta_star_ae = *ae_star;
      res.eta_star_baseline = *base_star;
      res.reduction = 1.0 - *ae_star / *base_star;
      res.reduction_valid = true;
      std::vector<std::vector<std::string>> srow = {
          {cfg.run_id, fmt_num(cfg.sys.rolloff), fmt_num(threshold), fmt_num(*ae_star),
           fmt_num(*base_star), fmt_num(res.reduction)}};
      write_csv(dir / "guardband_reduction.csv",
                {"run_id", "rolloff", "threshold_ser", "eta_star_ae", "eta_star_baseline",
                 "reduction"},
                srow);
    }
  }

  PlotOptions po;
  po.title = "SER vs guard band (rolloff " + fmt_num(cfg.sys.rolloff) + ")";
  po.xlabel = "eta";
  po.ylabel = "SER";
  po.log_y = true;
  po.y_floor = 1e-6;
  std::vector<Series> series(2);
  series[0] = {"ae", {}, "#d62728", false};
  series[1] = {"baseline", {}, "#1f77b4", false};
  double single_ser = std::nan("");
  for (const auto& r : res.rows) {
    if (std::isnan(r.ser)) continue;
    if (r.scheme == "baseline_single") single_ser = r.ser;
    for (auto& s : series)
      if (s.label == r.scheme && !std::isnan(r.eta))
        s.pts.emplace_back(r.eta, std::max(r.ser, 1e-7));
  }
  if (!std::isnan(single_ser) && !cfg.sweep.eta_grid.empty()) {
    Series floor{"baseline_single", {}, "#1f77b4", true};
    floor.pts.emplace_back(cfg.sweep.eta_grid.front(), std::max(single_ser, 1e-7));
    floor.pts.emplace_back(cfg.sweep.eta_grid.back(), std::max(single_ser, 1e-7));
    series.push_back(std::move(floor));
  }
  res.svg_path = dir / "guardband.svg";
  write_svg_plot(res.svg_path, po, series);
  return res;
}

SweepOutput run_ablation(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.run_id.empty()) cfg.run_id = default_run_id("ablation", cfg.seed);
  if (cfg.ch.n_channels < 3)
    throw ConfigError("ablation: multi-channel configuration required");
  const fs::path dir = ensure_out_dir(cfg);
  const ConstellationTable table = load_table_or_throw(cfg);
  const ParamVector init = load_init_or_throw(cfg);
  const Calibration cal = calibrate(cfg.sys, cfg.ch.snr_db, table);

  EvalConfig ev = cfg.eval;
  ev.seed = seed_stream(cfg.seed, 0xEEE);

  const std::size_t np = cfg.sweep.eta_grid.size();
  std::vector<std::vector<ResultRecord>> per_point(np);
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < np; ++i) {
    tasks.emplace_back([&, i] {
      const double eta = cfg.sweep.eta_grid[i];
      auto& out = per_point[i];
      try {
        const auto t0 = Clock::now();
        ChannelConfig ch = cfg.ch;
        ch.eta = eta;
        ch.v_p = 1.0;
        ch.v_clip = 1.0;
        TrainConfig tc = cfg.train;
        tc.seed = seed_stream(cfg.seed, 0xAB, i);
        const auto stages = ablation_run(init, tc, cfg.sys, ch, cal, ev);
        for (const auto& st : stages)
          out.push_back({cfg.run_id, st.label, eta, cfg.sys.rolloff, 1.0, 1.0, st.result.ser,
                         st.result.ci95, st.result.n_symbols, "", elapsed_s(t0)});
      } catch (const std::exception& e) {
        out.push_back(error_record(cfg, "ablation", eta, 1.0, e.what()));
      }
    });
  }
  run_tasks(cfg.workers, tasks);

  SweepOutput res;
  for (auto& v : per_point)
    for (auto& r : v) res.rows.push_back(std::move(r));
  res.csv_path = dir / "ablation.csv";
  write_result_csv(res.csv_path, res.rows);

  PlotOptions po;
  po.title = "Ablation: cumulative unfreezing";
  po.xlabel = "eta";
  po.ylabel = "SER";
  po.log_y = true;
  po.y_floor = 1e-6;
  const char* labels[5] = {"frozen", "+NN4", "+NN2", "+NN3", "+NN1"};
  const char* colors[5] = {"#7f7f7f", "#1f77b4", "#2ca02c", "#ff7f0e", "#d62728"};
  std::vector<Series> series;
  for (int s = 0; s < 5; ++s) {
    Series se{labels[s], {}, colors[s], false};
    for (const auto& r : res.rows)
      if (r.scheme == labels[s] && !std::isnan(r.ser))
        se.pts.emplace_back(r.eta, std::max(r.ser, 1e-7));
    series.push_back(std::move(se));
  }
  res.svg_path = dir / "ablation.svg";
  write_svg_plot(res.svg_path, po, series);
  return res;
}

std::filesystem::path run_baseline_constellation(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.run_id.empty()) cfg.run_id = default_run_id("constellation", cfg.seed);
  const fs::path dir = ensure_out_dir(cfg);
  const ConstellationTable t = train_baseline_constellation(
      cfg.ch.snr_db, cfg.sys.M, seed_stream(cfg.seed, 0xBC), cfg.train);
  const fs::path out = dir / "constellation.csv";
  save_constellation_csv(t, out);
  return out;
}

}  // namespace sc

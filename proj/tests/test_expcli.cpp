#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sc/configfile.hpp"
#include "sc/csvplot.hpp"
#include "sc/experiments.hpp"
#include "sc/training.hpp"

using namespace sc;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: defaults, overrides, failures") {
  const ExperimentConfig d = parse_config_text("");
  CHECK(d.sys.M == 64);
  CHECK(d.train.batch_symbols == 4096);
  CHECK(d.sweep.eta_grid.size() == 7);

  const ExperimentConfig c = parse_config_text(
      "[system]\nM = 16\nrolloff = 0.01\n[channel]\neta = 0.2\n"
      "[sweep]\nv_p_grid = 0.8, 0.9, 1.0\n[run]\nseed = 42\nworkers = 2\n");
  CHECK(c.sys.M == 16);
  CHECK(c.sys.rolloff == doctest::Approx(0.01));
  CHECK(c.ch.eta == doctest::Approx(0.2));
  CHECK(c.sweep.v_p_grid == std::vector<double>{0.8, 0.9, 1.0});
  CHECK(c.seed == 42);
  CHECK(c.workers == 2);

  CHECK_THROWS_AS(parse_config_text("[system]\nunknown_key = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[nosuchsection]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[system]\nM = banana\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("key_outside = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[system]\nM = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[system]\nrolloff = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[channel]\nn_channels = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[train]\nbatch_symbols = 16\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[sweep]\neta_grid =\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("[system]\nM 64\n"), ConfigError);
}

TEST_CASE("csv writer: schema and sanitization") {
  const fs::path dir = temp_dir("sc_csv_test");
  ResultRecord r;
  r.run_id = "t1";
  r.scheme = "ae";
  r.eta = 0.05;
  r.rolloff = 0.1;
  r.v_p = 1.0;
  r.v_clip = 1.0;
  r.ser = 0.0123;
  r.ci95 = 0.001;
  r.n_symbols = 1000;
  r.checkpoint = "a,b\nc";  // must be sanitized
  write_result_csv(dir / "t.csv", {r});
  const std::string text = read_file(dir / "t.csv");
  CHECK(text.find("run_id,scheme,eta,rolloff,v_p,v_clip,ser,ci95,n_symbols,checkpoint,seconds") == 0);
  CHECK(text.find("a;b;c") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("svg plot is a pure function of its inputs") {
  const fs::path dir = temp_dir("sc_svg_test");
  PlotOptions po;
  po.title = "t";
  po.xlabel = "x";
  po.ylabel = "y";
  po.log_y = true;
  std::vector<Series> s(1);
  s[0].label = "a";
  s[0].pts = {{0.0, 0.1}, {1.0, 0.01}, {2.0, 0.001}};
  write_svg_plot(dir / "a.svg", po, s);
  write_svg_plot(dir / "b.svg", po, s);
  CHECK(read_file(dir / "a.svg") == read_file(dir / "b.svg"));
  CHECK(read_file(dir / "a.svg").find("<svg") == 0);
  fs::remove_all(dir);
}

TEST_CASE("eta_crossing: interpolation and edge cases") {
  const std::vector<std::pair<double, double>> curve = {
      {0.0, 0.3}, {0.1, 0.1}, {0.2, 0.01}, {0.3, 0.01}};
  // Already below threshold at the first point.
  CHECK(eta_crossing(curve, 0.5).value() == doctest::Approx(0.0));
  // Between 0.1 and 0.2, interpolated on log-SER.
  const double x = eta_crossing(curve, 0.05).value();
  CHECK(x > 0.1);
  CHECK(x < 0.2);
  const double expect = 0.1 + 0.1 * (std::log(0.05) - std::log(0.1)) /
                                  (std::log(0.01) - std::log(0.1));
  CHECK(x == doctest::Approx(expect).epsilon(1e-12));
  // Never reached.
  CHECK(!eta_crossing(curve, 0.001).has_value());
  CHECK(!eta_crossing({}, 0.5).has_value());
}

TEST_CASE("baseline optimization picks the exact-inverse corner on a linear chain") {
  // With V_p forced to 1 and noiseless evaluation, V_clip = 1 is optimal
  // (any clipping strictly distorts).
  SystemParams sys;
  sys.M = 64;
  ChannelConfig ch;
  ch.n_channels = 1;
  ch.snr_db = 14.0;
  const ConstellationTable qam = square_qam(64);
  const Calibration cal = calibrate(sys, ch.snr_db, qam);
  const ParamVector bp = baseline_params(sys, qam);

  SweepConfig sweep;
  // Heavy clipping at 0.5 distorts every large sample; the inverse corner
  // must win decisively.
  sweep.baseline_v_clip_grid = {0.5, 1.0};
  sweep.search_target_errors = 200;
  sweep.search_max_frames = 2;
  EvalConfig ev;
  ev.payload = 4096;
  ev.guard = sys.guard;
  ev.target_errors = 300;
  ev.max_frames = 3;
  ev.seed = 4;
  const BaselineOpt opt = optimize_baseline(sys, ch, cal, bp, sweep, ev, false);
  CHECK(opt.v_clip == doctest::Approx(1.0));
  CHECK(opt.result.n_symbols > 0);
}

TEST_CASE("cli smoke: config error exit code and baseline-constellation run") {
  const fs::path dir = temp_dir("sc_cli_test");
  const fs::path cfg = dir / "c.cfg";
  {
    std::ofstream out(cfg);
    out << "[system]\nM = 4\n[train]\nbatch_symbols = 256\niterations = 50\n"
        << "[run]\nout_dir = " << (dir / "out").string() << "\nid = t\nseed = 5\n";
  }
  const std::string base = std::string(SCSIM_BINARY);
  CHECK(std::system((base + " baseline-constellation --config " + cfg.string() +
                     " > /dev/null 2>&1").c_str()) == 0);
  CHECK(fs::exists(dir / "out" / "t" / "constellation.csv"));
  const ConstellationTable t = load_constellation_csv(dir / "out" / "t" / "constellation.csv");
  CHECK(t.M() == 4);

  // Unknown key: exit code 2.
  const fs::path bad = dir / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "[system]\nnot_a_key = 1\n";
  }
  const int rc = std::system(
      (base + " eval --config " + bad.string() + " > /dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(rc) == 2);
  fs::remove_all(dir);
}

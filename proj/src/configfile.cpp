#include "sc/configfile.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sc {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct Raw {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::set<std::string> consumed;  // "section.key"
};

Raw parse_raw(const std::string& text) {
  Raw raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
      section = trim(line.substr(1, line.size() - 2));
      raw.sections[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!raw.sections[section].emplace(key, val).second)
      throw ConfigError("config: duplicate key " + section + "." + key);
  }
  return raw;
}

class Reader {
 public:
  explicit Reader(Raw& raw) : raw_(raw) {}

  template <typename T, typename Parse>
  void get(const std::string& sec, const std::string& key, T& out, Parse parse) {
    auto si = raw_.sections.find(sec);
    if (si == raw_.sections.end()) return;
    auto ki = si->second.find(key);
    if (ki == si->second.end()) return;
    raw_.consumed.insert(sec + "." + key);
    try {
      out = parse(ki->second);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError("config: bad value for " + sec + "." + key + ": " + e.what());
    }
  }

  void get_int(const std::string& s, const std::string& k, int& out) {
    get(s, k, out, [](const std::string& v) { return std::stoi(v); });
  }
  void get_u64(const std::string& s, const std::string& k, std::uint64_t& out) {
    get(s, k, out, [](const std::string& v) { return std::stoull(v); });
  }
  void get_double(const std::string& s, const std::string& k, double& out) {
    get(s, k, out, [](const std::string& v) { return std::stod(v); });
  }
  void get_string(const std::string& s, const std::string& k, std::string& out) {
    get(s, k, out, [](const std::string& v) { return v; });
  }
  void get_bool(const std::string& s, const std::string& k, bool& out) {
    get(s, k, out, [](const std::string& v) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ConfigError("expected true/false");
    });
  }
  void get_doubles(const std::string& s, const std::string& k, std::vector<double>& out) {
    get(s, k, out, [](const std::string& v) {
      std::vector<double> r;
      std::istringstream ss(v);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) r.push_back(std::stod(tok));
      }
      if (r.empty()) throw ConfigError("empty list");
      return r;
    });
  }

  void finish(const std::set<std::string>& known_sections) const {
    for (const auto& [sec, kv] : raw_.sections) {
      if (!known_sections.count(sec)) throw ConfigError("config: unknown section [" + sec + "]");
      for (const auto& [key, val] : kv)
        if (!raw_.consumed.count(sec + "." + key))
          throw ConfigError("config: unknown key " + sec + "." + key);
    }
  }

 private:
  Raw& raw_;
};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  Raw raw = parse_raw(text);
  Reader r(raw);
  ExperimentConfig c;

  r.get_int("system", "M", c.sys.M);
  r.get_int("system", "oversampling", c.sys.os);
  r.get_int("system", "span_symbols", c.sys.span);
  r.get_double("system", "rolloff", c.sys.rolloff);
  r.get_int("system", "guard_symbols", c.sys.guard);

  r.get_int("channel", "n_channels", c.ch.n_channels);
  r.get_double("channel", "eta", c.ch.eta);
  r.get_double("channel", "v_p", c.ch.v_p);
  r.get_double("channel", "v_clip", c.ch.v_clip);
  r.get_double("channel", "snr_db", c.ch.snr_db);
  r.get_bool("channel", "noiseless", c.ch.noiseless);

  r.get_int("train", "batch_symbols", c.train.batch_symbols);
  r.get_int("train", "iterations", c.train.iterations);
  r.get_int("train", "pretrain_iterations", c.train.pretrain_iterations);
  r.get_double("train", "lr", c.train.lr);
  r.get_double("train", "lr_drop_frac", c.train.lr_drop_frac);
  r.get_double("train", "lr_drop_factor", c.train.lr_drop_factor);

  r.get_int("eval", "payload_symbols", c.eval.payload);
  r.get_int("eval", "target_errors", c.eval.target_errors);
  r.get_int("eval", "max_frames", c.eval.max_frames);

  r.get_doubles("sweep", "v_p_grid", c.sweep.v_p_grid);
  r.get_doubles("sweep", "eta_grid", c.sweep.eta_grid);
  r.get_doubles("sweep", "baseline_v_clip_grid", c.sweep.baseline_v_clip_grid);
  r.get_doubles("sweep", "baseline_v_p_grid", c.sweep.baseline_v_p_grid);
  r.get_int("sweep", "search_target_errors", c.sweep.search_target_errors);
  r.get_int("sweep", "search_max_frames", c.sweep.search_max_frames);

  r.get_string("paths", "constellation_csv", c.paths.constellation_csv);
  r.get_string("paths", "init_checkpoint", c.paths.init_checkpoint);
  r.get_string("paths", "checkpoint_single", c.paths.checkpoint_single);
  r.get_string("paths", "checkpoint_multi", c.paths.checkpoint_multi);

  r.get_string("run", "id", c.run_id);
  r.get_string("run", "out_dir", c.out_dir);
  r.get_u64("run", "seed", c.seed);
  r.get_int("run", "workers", c.workers);

  r.finish({"system", "channel", "train", "eval", "sweep", "paths", "run"});

  if (c.sys.M < 2) throw ConfigError("config: M must be >= 2");
  if (c.sys.rolloff <= 0.0 || c.sys.rolloff > 1.0)
    throw ConfigError("config: rolloff must be in (0, 1]");
  if (c.ch.n_channels < 1 || c.ch.n_channels % 2 == 0)
    throw ConfigError("config: n_channels must be odd");
  if (c.train.batch_symbols < 256)
    throw ConfigError("config: batch_symbols must be >= 256");
  if (c.workers < 1) throw ConfigError("config: workers must be >= 1");
  if (c.eval.payload < 1) throw ConfigError("config: payload_symbols must be >= 1");
  c.eval.guard = c.sys.guard;
  return c;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace sc

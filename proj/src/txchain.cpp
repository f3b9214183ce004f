#include "sc/txchain.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "sc/fastmath.hpp"

namespace sc {

MlpSpec predistorter_spec() {
  MlpSpec s;
  s.input = 1;
  s.hidden = {16, 16};
  s.output = 1;
  s.hidden_act = Act::Tanh;
  return s;
}

ConstellationTable normalize_table(std::span<const cplx> raw) {
  if (raw.empty()) throw std::invalid_argument("normalize_table: empty table");
  double p = 0.0;
  for (const cplx& v : raw) p += std::norm(v);
  p /= static_cast<double>(raw.size());
  if (p <= 0.0) throw std::invalid_argument("normalize_table: all-zero table");
  const double g = 1.0 / std::sqrt(p);
  ConstellationTable t;
  t.points.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) t.points[i] = raw[i] * g;
  return t;
}

cvec map_messages(std::span<const int> messages, std::span<const cplx> raw_points) {
  const ConstellationTable t = normalize_table(raw_points);
  cvec out(messages.size());
  for (std::size_t k = 0; k < messages.size(); ++k) {
    const int m = messages[k];
    if (m < 0 || m >= t.M()) throw std::invalid_argument("map_messages: message out of range");
    out[k] = t.points[static_cast<std::size_t>(m)];
  }
  return out;
}

void map_messages_backward(std::span<const int> messages, std::span<const cplx> raw_points,
                           std::span<const cplx> d_symbols, std::span<double> d_raw) {
  const std::size_t M = raw_points.size();
  if (d_raw.size() != 2 * M)
    throw std::invalid_argument("map_messages_backward: bad d_raw size");
  // Accumulate symbol cotangents onto the table.
  cvec tbar(M, cplx{0.0, 0.0});
  for (std::size_t k = 0; k < messages.size(); ++k)
    tbar[static_cast<std::size_t>(messages[k])] += d_symbols[k];

  double p = 0.0;
  for (const cplx& v : raw_points) p += std::norm(v);
  p /= static_cast<double>(M);
  const double g = 1.0 / std::sqrt(p);
  // table_m = raw_m * g(raw); the scale couples every entry.
  double s = 0.0;
  for (std::size_t m = 0; m < M; ++m)
    s += raw_points[m].real() * tbar[m].real() + raw_points[m].imag() * tbar[m].imag();
  const double coef = s / (static_cast<double>(M) * p * std::sqrt(p));
  for (std::size_t m = 0; m < M; ++m) {
    d_raw[2 * m] += g * tbar[m].real() - coef * raw_points[m].real();
    d_raw[2 * m + 1] += g * tbar[m].imag() - coef * raw_points[m].imag();
  }
}

ComplexSignal pulse_shape(std::span<const cplx> symbols, const FirFilter& theta2, int os) {
  if (os < 2) throw std::invalid_argument("pulse_shape: os must be >= 2");
  ComplexSignal x;
  x.rate = 1.0;
  x.samples.assign(symbols.begin(), symbols.end());
  return convolve(upsample(x, os), theta2);
}

std::pair<ComplexSignal, double> peak_normalize(const ComplexSignal& s) {
  double peak = 0.0;
  for (const cplx& v : s.samples)
    peak = std::max({peak, std::abs(v.real()), std::abs(v.imag())});
  if (peak <= 0.0) throw std::invalid_argument("peak_normalize: all-zero frame");
  ComplexSignal out;
  out.rate = s.rate;
  out.samples.resize(s.size());
  const double inv = 1.0 / peak;
  for (std::size_t i = 0; i < s.size(); ++i) out.samples[i] = s.samples[i] * inv;
  return {std::move(out), peak};
}

ComplexSignal predistort_nn(const ComplexSignal& s_prime, std::span<const double> theta3) {
  const MlpSpec spec = predistorter_spec();
  ComplexSignal out;
  out.rate = s_prime.rate;
  out.samples.resize(s_prime.size());
  if (s_prime.size() == 0) return out;
  const double* in = reinterpret_cast<const double*>(s_prime.samples.data());
  double* o = reinterpret_cast<double*>(out.samples.data());
  const std::size_t n = 2 * s_prime.size();
  mlp_forward(spec, theta3, in, static_cast<int>(n), o);
  clip_rails(o, n);
  return out;
}

void arcsin_dpd_rails(const double* u, double* out, std::size_t n, double v_clip) {
  constexpr double k2pi = 2.0 / std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = std::fabs(u[i]);
    const double v = arith_min(v_clip, k2pi * std::asin(arith_min(a, 1.0)));
    out[i] = std::copysign(v, u[i]);
  }
}

void clip_rails(double* u, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) u[i] = arith_min(arith_max(u[i], -1.0), 1.0);
}

ComplexSignal arcsin_dpd(const ComplexSignal& s_prime, double v_clip) {
  if (v_clip <= 0.0) throw std::invalid_argument("arcsin_dpd: v_clip must be > 0");
  for (const cplx& v : s_prime.samples)
    if (std::fabs(v.real()) > 1.0 + 1e-12 || std::fabs(v.imag()) > 1.0 + 1e-12)
      throw std::invalid_argument("arcsin_dpd: rail magnitude exceeds 1");
  ComplexSignal out;
  out.rate = s_prime.rate;
  out.samples.resize(s_prime.size());
  if (s_prime.size() == 0) return out;
  arcsin_dpd_rails(reinterpret_cast<const double*>(s_prime.samples.data()),
                   reinterpret_cast<double*>(out.samples.data()), 2 * s_prime.size(), v_clip);
  return out;
}

void save_constellation_csv(const ConstellationTable& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_constellation_csv: cannot open " + path.string());
  out << "message,i,q\n";
  out.precision(17);
  for (std::size_t m = 0; m < t.points.size(); ++m)
    out << m << "," << t.points[m].real() << "," << t.points[m].imag() << "\n";
}

ConstellationTable load_constellation_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_constellation_csv: cannot open " + path.string());
  std::string line;
  std::vector<std::pair<int, cplx>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("message", 0) == 0) continue;
    std::istringstream ss(line);
    std::string tok;
    int m;
    double i, q;
    if (!std::getline(ss, tok, ',')) continue;
    m = std::stoi(tok);
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("constellation csv: bad row");
    i = std::stod(tok);
    if (!std::getline(ss, tok, ',')) throw std::runtime_error("constellation csv: bad row");
    q = std::stod(tok);
    rows.emplace_back(m, cplx{i, q});
  }
  ConstellationTable t;
  t.points.resize(rows.size());
  for (const auto& [m, v] : rows) {
    if (m < 0 || static_cast<std::size_t>(m) >= rows.size())
      throw std::runtime_error("constellation csv: message index out of range");
    t.points[static_cast<std::size_t>(m)] = v;
  }
  return t;
}

ConstellationTable square_qam(int M) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(M))));
  if (side * side != M) throw std::invalid_argument("square_qam: M must be a perfect square");
  cvec raw;
  raw.reserve(static_cast<std::size_t>(M));
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c)
      raw.emplace_back(2.0 * c - (side - 1), 2.0 * r - (side - 1));
  return normalize_table(raw);
}

}  // namespace sc

#include "sc/rxchain.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sc/fastmath.hpp"

namespace sc {

MlpSpec demapper_spec(int M) {
  MlpSpec s;
  s.input = 2;
  s.hidden = {64, 64};
  s.output = M;
  s.hidden_act = Act::Relu;
  return s;
}

ComplexSignal adc(const ComplexSignal& x) {
  if (x.rate < 2.0) throw std::invalid_argument("adc: input rate below 2 f_b");
  const double ratio = x.rate / 2.0;
  const int factor = static_cast<int>(std::lround(ratio));
  if (std::abs(ratio - factor) > 1e-9)
    throw std::invalid_argument("adc: rate must be an integer multiple of 2 f_b");
  ComplexSignal y = brickwall(x, 2.0);
  if (factor == 1) return y;
  return downsample(y, factor, 0);
}

ComplexSignal matched_filter(const ComplexSignal& y, double rolloff, int span) {
  if (std::abs(y.rate - 2.0) > 1e-9)
    throw std::invalid_argument("matched_filter: input must be at 2 samples per symbol");
  return convolve(y, rrc_taps(rolloff, span, 2));
}

cvec symbol_sample(const ComplexSignal& z, int total_delay, int guard) {
  if (std::abs(z.rate - 2.0) > 1e-9)
    throw std::invalid_argument("symbol_sample: input must be at 2 samples per symbol");
  if (total_delay < 0 || static_cast<std::size_t>(total_delay) >= std::max<std::size_t>(z.size(), 1))
    throw std::invalid_argument("symbol_sample: delay out of frame");
  cvec all;
  for (std::size_t i = static_cast<std::size_t>(total_delay); i < z.size(); i += 2)
    all.push_back(z.samples[i]);
  const std::size_t n = all.size();
  if (n < 2 * static_cast<std::size_t>(guard)) return {};
  return cvec(all.begin() + guard, all.end() - guard);
}

std::vector<double> demap_nn_probs(std::span<const cplx> y, std::span<const double> theta4,
                                   int M) {
  const MlpSpec spec = demapper_spec(M);
  const int n = static_cast<int>(y.size());
  std::vector<double> logits(static_cast<std::size_t>(n) * M);
  mlp_forward(spec, theta4, reinterpret_cast<const double*>(y.data()), n, logits.data());
  for (int k = 0; k < n; ++k) {
    double* row = logits.data() + static_cast<std::size_t>(k) * M;
    double mx = row[0];
    for (int m = 1; m < M; ++m) mx = std::max(mx, row[m]);
    double sum = 0.0;
    for (int m = 0; m < M; ++m) {
      row[m] = fast_exp(row[m] - mx);
      sum += row[m];
    }
    const double inv = 1.0 / sum;
    for (int m = 0; m < M; ++m) row[m] *= inv;
  }
  return logits;
}

std::vector<int> demap_nn(std::span<const cplx> y, std::span<const double> theta4, int M) {
  const std::vector<double> q = demap_nn_probs(y, theta4, M);
  std::vector<int> out(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double* row = q.data() + k * static_cast<std::size_t>(M);
    int best = 0;
    for (int m = 1; m < M; ++m)
      if (row[m] > row[best]) best = m;
    out[k] = best;
  }
  return out;
}

std::vector<int> demap_mindist(std::span<const cplx> y, const ConstellationTable& table) {
  std::vector<int> out(y.size());
  const int M = table.M();
  for (std::size_t k = 0; k < y.size(); ++k) {
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int m = 0; m < M; ++m) {
      const double d = std::norm(y[k] - table.points[static_cast<std::size_t>(m)]);
      if (d < bd) {
        bd = d;
        best = m;
      }
    }
    out[k] = best;
  }
  return out;
}

SerResult ser(std::span<const int> tx, std::span<const int> rx) {
  if (tx.size() != rx.size()) throw std::invalid_argument("ser: length mismatch");
  if (tx.empty()) throw std::invalid_argument("ser: empty input");
  SerResult r;
  r.n_symbols = static_cast<long>(tx.size());
  for (std::size_t i = 0; i < tx.size(); ++i)
    if (tx[i] != rx[i]) ++r.n_errors;
  r.ser = static_cast<double>(r.n_errors) / static_cast<double>(r.n_symbols);
  r.ci95 = 1.96 * std::sqrt(r.ser * (1.0 - r.ser) / static_cast<double>(r.n_symbols));
  return r;
}

double qam_ser_analytic(int M, double gamma) {
  const double root_m = std::sqrt(static_cast<double>(M));
  const double q_arg = std::sqrt(3.0 * gamma / (M - 1));
  const double q = 0.5 * std::erfc(q_arg / std::sqrt(2.0));
  const double per_rail = 2.0 * (1.0 - 1.0 / root_m) * q;
  return 1.0 - (1.0 - per_rail) * (1.0 - per_rail);
}

}  // namespace sc

#include "sc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "sc/fastmath.hpp"
#include "sc/rng.hpp"

namespace sc {

double ce_loss(std::span<const double> q, std::span<const int> labels, int M) {
  if (q.size() != labels.size() * static_cast<std::size_t>(M))
    throw std::invalid_argument("ce_loss: shape mismatch");
  if (labels.empty()) throw std::invalid_argument("ce_loss: empty batch");
  double acc = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double p = q[k * static_cast<std::size_t>(M) + static_cast<std::size_t>(labels[k])];
    acc += std::log(std::max(p, 1e-12));
  }
  return -acc / static_cast<double>(labels.size());
}

double ce_from_logits(std::span<const double> logits, std::span<const int> labels, int M,
                      std::span<double> dlogits) {
  const std::size_t n = labels.size();
  if (logits.size() != n * static_cast<std::size_t>(M))
    throw std::invalid_argument("ce_from_logits: shape mismatch");
  const double invn = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double* row = logits.data() + k * static_cast<std::size_t>(M);
    double* drow = dlogits.empty() ? nullptr : dlogits.data() + k * static_cast<std::size_t>(M);
    double mx = row[0];
    for (int m = 1; m < M; ++m) mx = std::max(mx, row[m]);
    double sum = 0.0;
    for (int m = 0; m < M; ++m) {
      const double e = fast_exp(row[m] - mx);
      if (drow) drow[m] = e;
      sum += e;
    }
    const int lab = labels[k];
    loss += std::log(sum) + mx - row[lab];
    if (drow) {
      const double inv = invn / sum;
      for (int m = 0; m < M; ++m) drow[m] *= inv;
      drow[lab] -= invn;
    }
  }
  return loss * invn;
}

ConstellationTable initial_table(int M) {
  if (M == 2) {
    ConstellationTable t;
    t.points = {cplx{-1.0, 0.0}, cplx{1.0, 0.0}};
    return t;
  }
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(M))));
  if (side * side == M) return square_qam(M);
  // Non-square orders: concentric lattice seeded deterministically.
  Rng rng(0xC0DE);
  cvec raw(static_cast<std::size_t>(M));
  for (auto& v : raw) v = cplx{rng.next_gaussian(), rng.next_gaussian()};
  return normalize_table(raw);
}

namespace {

double lr_at(const TrainConfig& cfg, int it, int total) {
  const double frac = total > 0 ? static_cast<double>(it) / total : 0.0;
  return frac >= cfg.lr_drop_frac ? cfg.lr * cfg.lr_drop_factor : cfg.lr;
}

bool ma_non_increasing(const std::vector<double>& trace) {
  const std::size_t win = 500;
  if (trace.size() < 4 * win) return true;
  std::vector<double> ma;
  double acc = std::accumulate(trace.begin(), trace.begin() + static_cast<std::ptrdiff_t>(win), 0.0);
  ma.push_back(acc / win);
  for (std::size_t i = win; i < trace.size(); ++i) {
    acc += trace[i] - trace[i - win];
    ma.push_back(acc / win);
  }
  const std::size_t start = (3 * ma.size()) / 4;
  for (std::size_t i = start; i + 1 < ma.size(); ++i)
    if (ma[i + 1] > ma[i] * 1.001) return false;
  return true;
}

}  // namespace

ConstellationTable train_baseline_constellation(double snr_db, int M, std::uint64_t seed,
                                                const TrainConfig& cfg) {
  if (M < 2) throw std::invalid_argument("train_baseline_constellation: M must be >= 2");
  const MlpSpec dem = demapper_spec(M);
  std::vector<SegmentLayout> segs(2);
  segs[0] = {"theta1", 0, static_cast<std::size_t>(M) * 2, {static_cast<std::size_t>(M), 2}};
  segs[1] = {"theta4", 0, dem.param_count(), {dem.param_count()}};
  ParamVector p = make_param_vector(segs);

  const ConstellationTable init = initial_table(M);
  for (int m = 0; m < M; ++m) {
    p.values[2 * static_cast<std::size_t>(m)] = init.points[static_cast<std::size_t>(m)].real();
    p.values[2 * static_cast<std::size_t>(m) + 1] =
        init.points[static_cast<std::size_t>(m)].imag();
  }
  {
    Rng rng(seed_stream(seed, 0x41));
    mlp_init(dem, {p.values.data() + p.segments[1].offset, p.segments[1].size}, rng);
  }

  const double sigma2 = std::pow(10.0, -snr_db / 10.0);
  const double srail = std::sqrt(sigma2 / 2.0);
  const int B = cfg.batch_symbols;
  AdamState adam = make_adam_state(p.size(), cfg.lr);
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;
  const std::vector<bool> frozen = {false, false};

  std::vector<int> labels(static_cast<std::size_t>(B));
  cvec x(static_cast<std::size_t>(B)), y(static_cast<std::size_t>(B));
  std::vector<double> logits(static_cast<std::size_t>(B) * M),
      dlogits(static_cast<std::size_t>(B) * M);
  std::vector<double> grad(p.size());
  std::vector<double> dy(static_cast<std::size_t>(B) * 2);
  MlpCache cache;

  const int iters = cfg.iterations;
  for (int it = 0; it < iters; ++it) {
    adam.lr = lr_at(cfg, it, iters);
    Rng rng(seed_stream(seed, 0x42, static_cast<std::uint64_t>(it)));
    const std::span<const cplx> raw{reinterpret_cast<const cplx*>(p.values.data()),
                                    static_cast<std::size_t>(M)};
    const ConstellationTable t = normalize_table(raw);
    for (int k = 0; k < B; ++k) {
      labels[static_cast<std::size_t>(k)] =
          static_cast<int>(rng.next_below(static_cast<std::uint32_t>(M)));
      x[static_cast<std::size_t>(k)] = t.points[static_cast<std::size_t>(labels[static_cast<std::size_t>(k)])];
      y[static_cast<std::size_t>(k)] =
          x[static_cast<std::size_t>(k)] +
          cplx{srail * rng.next_gaussian(), srail * rng.next_gaussian()};
    }
    const std::span<const double> theta4{p.values.data() + p.segments[1].offset,
                                         p.segments[1].size};
    mlp_forward(dem, theta4, reinterpret_cast<const double*>(y.data()), B, logits.data(),
                &cache);
    const double loss = ce_from_logits(logits, labels, M, dlogits);
    if (!std::isfinite(loss)) throw TrainingDivergedError(it, p);

    std::fill(grad.begin(), grad.end(), 0.0);
    mlp_backward(dem, theta4, cache, dlogits.data(), dy.data(),
                 {grad.data() + p.segments[1].offset, p.segments[1].size});
    map_messages_backward(labels, raw,
                          std::span<const cplx>(reinterpret_cast<const cplx*>(dy.data()),
                                                static_cast<std::size_t>(B)),
                          {grad.data(), static_cast<std::size_t>(M) * 2});
    adam_step(p, grad, adam, frozen);
  }

  return normalize_table(std::span<const cplx>(reinterpret_cast<const cplx*>(p.values.data()),
                                               static_cast<std::size_t>(M)));
}

namespace {

// Supervised fit of the per-rail pre-distorter to the clipped-arcsin curve.
// The target has unbounded slope at the rail ends, so plain MSE training from
// a random init stalls there. Instead: spread the first-layer tanh centers
// across the domain (steepest at the edges), solve the output layer in closed
// form against those features, then refine everything with an edge-weighted
// Adam loop while tracking the uniform-grid max error the contract is
// stated in.
void fit_theta3(std::span<double> theta3, double v_clip, const TrainConfig& cfg,
                std::uint64_t seed) {
  const MlpSpec spec = predistorter_spec();
  const int G = 10000;
  std::vector<double> u(static_cast<std::size_t>(G)), target(static_cast<std::size_t>(G));
  for (int i = 0; i < G; ++i)
    u[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (G - 1);
  arcsin_dpd_rails(u.data(), target.data(), static_cast<std::size_t>(G), v_clip);

  std::vector<SegmentLayout> seg1(1);
  seg1[0] = {"theta3", 0, theta3.size(), {theta3.size()}};
  ParamVector pv = make_param_vector(seg1);
  {
    Rng rng(seed_stream(seed, 0x33));
    mlp_init(spec, pv.values, rng);
    const int h = spec.hidden[0];
    // Layer 1: tanh(a (u - c)) ramps, odd-symmetric pair layout, steep ramps
    // pinned near the rails where the target bends hardest.
    for (int i = 0; i < h; ++i) {
      const int half = h / 2;
      const int j = i % half;
      const double sign = i < half ? 1.0 : -1.0;
      double c, a;
      if (j < half - 3) {
        c = sign * (j + 0.5) / (half - 2.5) * 0.82;
        a = 3.0;
      } else if (j == half - 3) {
        c = sign * 0.945;
        a = 10.0;
      } else if (j == half - 2) {
        c = sign * 0.990;
        a = 30.0;
      } else {
        c = sign * 0.9993;
        a = 70.0;
      }
      pv.values[static_cast<std::size_t>(i)] = a;
      pv.values[static_cast<std::size_t>(h + i)] = -a * c;
    }
    // Layer 2: near-pass-through mixing.
    const std::size_t off2 = 2 * static_cast<std::size_t>(h);
    for (int r = 0; r < h; ++r)
      for (int cidx = 0; cidx < h; ++cidx)
        pv.values[off2 + static_cast<std::size_t>(r) * h + cidx] =
            (r == cidx ? 1.1 : 0.0) + 0.02 * rng.next_gaussian();
  }

  std::vector<double> out(static_cast<std::size_t>(G)), dout(static_cast<std::size_t>(G));
  MlpCache cache;

  // Closed-form output layer against the layer-2 features (edge-weighted
  // least squares).
  {
    mlp_forward(spec, pv.values, u.data(), G, out.data(), &cache);
    const int h = spec.hidden[1];
    Eigen::MatrixXd A(G, h + 1);
    Eigen::VectorXd b(G);
    for (int i = 0; i < G; ++i) {
      const double ui = u[static_cast<std::size_t>(i)];
      const double wls = std::sqrt(1.0 / std::sqrt(1.0 - ui * ui + 1e-3));
      for (int j = 0; j < h; ++j)
        A(i, j) = wls * cache.act[1][static_cast<std::size_t>(i) * h + static_cast<std::size_t>(j)];
      A(i, h) = wls;
      b(i) = wls * target[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd AtA = A.transpose() * A;
    AtA.diagonal().array() += 1e-8 * G;
    const Eigen::VectorXd x = AtA.ldlt().solve(A.transpose() * b);
    const std::size_t off3 = pv.size() - static_cast<std::size_t>(h) - 1;
    for (int j = 0; j < h; ++j) pv.values[off3 + static_cast<std::size_t>(j)] = x(j);
    pv.values[pv.size() - 1] = x(h);
  }

  // Edge-weighted refinement; snapshots keep the best uniform max error.
  std::vector<double> wgt(static_cast<std::size_t>(G));
  double wsum = 0.0;
  for (int i = 0; i < G; ++i) {
    const double ui = u[static_cast<std::size_t>(i)];
    wgt[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(1.0 - ui * ui + 1e-3);
    wsum += wgt[static_cast<std::size_t>(i)];
  }
  for (auto& v : wgt) v /= wsum;

  const int budget = 6 * cfg.pretrain_iterations;
  AdamState adam = make_adam_state(theta3.size(), 1e-3);
  std::vector<double> g(theta3.size());
  std::vector<double> best(pv.values);
  double best_err = 1e30;
  for (int it = 0; it < budget; ++it) {
    adam.lr = it < budget * 3 / 5 ? 1e-3 : (it < budget * 17 / 20 ? 2e-4 : 4e-5);
    mlp_forward(spec, pv.values, u.data(), G, out.data(), &cache);
    double maxerr = 0.0;
    for (int i = 0; i < G; ++i) {
      const double e = out[static_cast<std::size_t>(i)] - target[static_cast<std::size_t>(i)];
      dout[static_cast<std::size_t>(i)] = 2.0 * e * wgt[static_cast<std::size_t>(i)];
      maxerr = std::max(maxerr, std::fabs(e));
    }
    if (maxerr < best_err) {
      best_err = maxerr;
      best = pv.values;
      if (best_err < 2.5e-3) break;
    }
    std::fill(g.begin(), g.end(), 0.0);
    mlp_backward(spec, pv.values, cache, dout.data(), nullptr, g);
    adam_step(pv, g, adam, {false});
  }
  if (best_err >= 2e-2)
    throw PretrainFailure("theta3", "fit max error " + std::to_string(best_err));
  std::copy(best.begin(), best.end(), theta3.begin());
}

// Demapper pre-training on the linearized symbol channel z = x + n.
void fit_theta4(std::span<double> theta4, const ConstellationTable& table, double sigma2_sym,
                const TrainConfig& cfg, std::uint64_t seed) {
  const int M = table.M();
  const MlpSpec spec = demapper_spec(M);
  Rng rng0(seed_stream(seed, 0x44));
  mlp_init(spec, theta4, rng0);

  std::vector<SegmentLayout> seg1(1);
  seg1[0] = {"theta4", 0, theta4.size(), {theta4.size()}};
  ParamVector pv = make_param_vector(seg1);
  std::copy(theta4.begin(), theta4.end(), pv.values.begin());

  const int B = cfg.batch_symbols;
  const int iters = 2 * cfg.pretrain_iterations;
  const double srail = std::sqrt(sigma2_sym / 2.0);
  AdamState adam = make_adam_state(theta4.size(), cfg.lr);
  std::vector<int> labels(static_cast<std::size_t>(B));
  cvec z(static_cast<std::size_t>(B));
  std::vector<double> logits(static_cast<std::size_t>(B) * M),
      dlogits(static_cast<std::size_t>(B) * M), g(theta4.size());
  MlpCache cache;

  for (int it = 0; it < iters; ++it) {
    adam.lr = lr_at(cfg, it, iters);
    Rng rng(seed_stream(seed, 0x45, static_cast<std::uint64_t>(it)));
    for (int k = 0; k < B; ++k) {
      labels[static_cast<std::size_t>(k)] =
          static_cast<int>(rng.next_below(static_cast<std::uint32_t>(M)));
      z[static_cast<std::size_t>(k)] =
          table.points[static_cast<std::size_t>(labels[static_cast<std::size_t>(k)])] +
          cplx{srail * rng.next_gaussian(), srail * rng.next_gaussian()};
    }
    mlp_forward(spec, pv.values, reinterpret_cast<const double*>(z.data()), B, logits.data(),
                &cache);
    const double loss = ce_from_logits(logits, labels, M, dlogits);
    if (!std::isfinite(loss)) throw PretrainFailure("theta4", "loss diverged");
    std::fill(g.begin(), g.end(), 0.0);
    mlp_backward(spec, pv.values, cache, dlogits.data(), nullptr, g);
    adam_step(pv, g, adam, {false});
  }
  std::copy(pv.values.begin(), pv.values.end(), theta4.begin());

  // Decision agreement with minimum distance on the noiseless points.
  const std::vector<int> nn = demap_nn(table.points, theta4, M);
  const std::vector<int> md = demap_mindist(table.points, table);
  int agree = 0;
  for (int m = 0; m < M; ++m)
    if (nn[static_cast<std::size_t>(m)] == md[static_cast<std::size_t>(m)]) ++agree;
  if (agree < (99 * M + 99) / 100)
    throw PretrainFailure("theta4", "noiseless agreement " + std::to_string(agree) + "/" +
                                        std::to_string(M));
}

}  // namespace

ParamVector pretrain_all(const SystemParams& sys, const Calibration& cal,
                         const ConstellationTable& baseline_table, const TrainConfig& cfg,
                         double v_clip) {
  ParamVector p = make_chain_params(sys);

  // theta1: exact copy of the baseline constellation.
  auto t1 = p.seg(Seg::theta1);
  for (int m = 0; m < sys.M; ++m) {
    t1[2 * static_cast<std::size_t>(m)] = baseline_table.points[static_cast<std::size_t>(m)].real();
    t1[2 * static_cast<std::size_t>(m) + 1] =
        baseline_table.points[static_cast<std::size_t>(m)].imag();
  }

  // theta2: exact copy of the RRC pulse shaper.
  const FirFilter rrc = rrc_taps(sys.rolloff, sys.span, sys.os);
  auto t2 = p.seg(Seg::theta2);
  for (std::size_t j = 0; j < rrc.taps.size(); ++j) {
    t2[2 * j] = rrc.taps[j].real();
    t2[2 * j + 1] = rrc.taps[j].imag();
  }

  fit_theta3(p.seg(Seg::theta3), v_clip, cfg, cfg.seed);
  fit_theta4(p.seg(Seg::theta4), baseline_table, cal.sigma2_sym, cfg, cfg.seed);
  return p;
}

TrainResult train_joint(const ParamVector& init, const TrainConfig& cfg,
                        const SystemParams& sys, const ChannelConfig& ch,
                        const Calibration& cal) {
  FrameGeom geom;
  geom.payload = cfg.batch_symbols;
  geom.guard = sys.guard;
  geom.os = sys.os;
  const Pipeline pipe(sys, ch, cal, geom);
  const int center = ch.n_channels / 2;
  const int P = geom.payload;
  const int M = sys.M;
  const MlpSpec dem = demapper_spec(M);

  TrainResult res;
  res.params = init;
  ParamVector& p = res.params;

  AdamState adam = make_adam_state(p.size(), cfg.lr);
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;
  std::vector<bool> frozen(4);
  for (int s = 0; s < 4; ++s) frozen[static_cast<std::size_t>(s)] = !cfg.trainable[static_cast<std::size_t>(s)];
  const bool any_chain_grad = cfg.trainable[0] || cfg.trainable[1] || cfg.trainable[2];
  const bool any_grad = any_chain_grad || cfg.trainable[3];

  Pipeline::Work w;
  std::vector<int> labels(static_cast<std::size_t>(P));
  std::vector<double> logits(static_cast<std::size_t>(P) * M),
      dlogits(static_cast<std::size_t>(P) * M);
  std::vector<double> grad(p.size());
  std::vector<double> dz(static_cast<std::size_t>(P) * 2);
  MlpCache dem_cache;
  res.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int it = 0; it < cfg.iterations; ++it) {
    adam.lr = lr_at(cfg, it, cfg.iterations);
    const auto msgs = pipe.draw_messages(seed_stream(cfg.seed, 0x7A, static_cast<std::uint64_t>(it)));

    Pipeline::Options opts;
    opts.dpd = DpdMode::NeuralNet;
    opts.v_p = ch.v_p;
    opts.v_clip = ch.v_clip;
    opts.noise_seed = seed_stream(cfg.seed, 0x7B, static_cast<std::uint64_t>(it));
    opts.keep_grad = any_chain_grad;
    opts.need_grad = cfg.trainable;
    pipe.forward(p, msgs, opts, w);

    const auto& tx = msgs[static_cast<std::size_t>(center)];
    for (int k = 0; k < P; ++k)
      labels[static_cast<std::size_t>(k)] = tx[static_cast<std::size_t>(k + geom.guard)];

    mlp_forward(dem, p.seg(Seg::theta4), reinterpret_cast<const double*>(w.z.data()), P,
                logits.data(), any_grad ? &dem_cache : nullptr);
    const double loss = ce_from_logits(logits, labels, M, dlogits);
    res.loss_trace.push_back(loss);
    if (!std::isfinite(loss)) throw TrainingDivergedError(it, p);

    if (any_grad) {
      std::fill(grad.begin(), grad.end(), 0.0);
      const std::span<double> g4 =
          cfg.trainable[3] ? std::span<double>{grad.data() + p.layout(Seg::theta4).offset,
                                               p.layout(Seg::theta4).size}
                           : std::span<double>{};
      mlp_backward(dem, p.seg(Seg::theta4), dem_cache, dlogits.data(),
                   any_chain_grad ? dz.data() : nullptr, g4);
      if (any_chain_grad)
        pipe.backward(p, msgs, w,
                      std::span<const cplx>(reinterpret_cast<const cplx*>(dz.data()),
                                            static_cast<std::size_t>(P)),
                      grad);
      adam_step(p, grad, adam, frozen);
    }
  }

  res.converged = ma_non_increasing(res.loss_trace);
  return res;
}

std::vector<AblationStage> ablation_run(const ParamVector& pretrained, const TrainConfig& cfg,
                                        const SystemParams& sys, const ChannelConfig& ch,
                                        const Calibration& cal, const EvalConfig& eval_cfg,
                                        const std::vector<Seg>& order) {
  static const char* kNnName[4] = {"NN1", "NN2", "NN3", "NN4"};
  std::vector<AblationStage> stages;

  {
    AblationStage s0;
    s0.label = "frozen";
    s0.params = pretrained;
    s0.result = eval_ser(sys, ch, cal, pretrained, DpdMode::NeuralNet, DemapKind::NeuralNet,
                         eval_cfg);
    stages.push_back(std::move(s0));
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    TrainConfig stage_cfg = cfg;
    stage_cfg.trainable = {false, false, false, false};
    for (std::size_t j = 0; j <= i; ++j)
      stage_cfg.trainable[static_cast<std::size_t>(order[j])] = true;
    TrainResult tr = train_joint(pretrained, stage_cfg, sys, ch, cal);
    AblationStage st;
    st.label = "+" + std::string(kNnName[static_cast<int>(order[i])]);
    st.result = eval_ser(sys, ch, cal, tr.params, DpdMode::NeuralNet, DemapKind::NeuralNet,
                         eval_cfg);
    st.params = std::move(tr.params);
    stages.push_back(std::move(st));
  }
  return stages;
}

}  // namespace sc

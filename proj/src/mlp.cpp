#include "sc/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "sc/fastmath.hpp"
#include "sc/rng.hpp"

namespace sc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using MapConstMat = Eigen::Map<const RowMat>;
using MapVec = Eigen::Map<Eigen::VectorXd>;
using MapConstVec = Eigen::Map<const Eigen::VectorXd>;

void apply_act(Act a, double* z, std::size_t n) {
  switch (a) {
    case Act::Tanh:
      tanh_array(z, z, n);
      break;
    case Act::Relu:
      for (std::size_t i = 0; i < n; ++i) z[i] = arith_max(z[i], 0.0);
      break;
    case Act::Linear:
      break;
  }
}

// dz = da * act'(z), expressed through the cached post-activation.
void apply_act_grad(Act a, const double* post, double* dz, std::size_t n) {
  switch (a) {
    case Act::Tanh:
      for (std::size_t i = 0; i < n; ++i) dz[i] *= 1.0 - post[i] * post[i];
      break;
    case Act::Relu:
      for (std::size_t i = 0; i < n; ++i) dz[i] = post[i] > 0.0 ? dz[i] : 0.0;
      break;
    case Act::Linear:
      break;
  }
}

}  // namespace

std::vector<int> MlpSpec::layer_sizes() const {
  std::vector<int> s;
  s.push_back(input);
  for (int h : hidden) s.push_back(h);
  s.push_back(output);
  return s;
}

std::size_t MlpSpec::param_count() const {
  const auto s = layer_sizes();
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < s.size(); ++l)
    n += static_cast<std::size_t>(s[l + 1]) * s[l] + s[l + 1];
  return n;
}

void mlp_forward(const MlpSpec& spec, std::span<const double> params, const double* x,
                 int batch, double* y, MlpCache* cache) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument("mlp_forward: bad param count");
  const auto sizes = spec.layer_sizes();
  const std::size_t n_layers = sizes.size() - 1;

  if (cache) {
    cache->batch = batch;
    cache->input.assign(x, x + static_cast<std::size_t>(batch) * spec.input);
    cache->act.assign(n_layers - 1, {});
  }

  std::vector<double> cur(x, x + static_cast<std::size_t>(batch) * spec.input);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    MapConstMat W(params.data() + off, out, in);
    MapConstVec b(params.data() + off + static_cast<std::size_t>(out) * in, out);
    off += static_cast<std::size_t>(out) * in + out;

    std::vector<double> next(static_cast<std::size_t>(batch) * out);
    MapMat Z(next.data(), batch, out);
    Z.noalias() = MapConstMat(cur.data(), batch, in) * W.transpose();
    Z.rowwise() += b.transpose();

    if (l + 1 < n_layers) {
      apply_act(spec.hidden_act, next.data(), next.size());
      if (cache) cache->act[l] = next;
    }
    cur = std::move(next);
  }
  std::copy(cur.begin(), cur.end(), y);
}

void mlp_backward(const MlpSpec& spec, std::span<const double> params, const MlpCache& cache,
                  const double* dy, double* dx, std::span<double> d_params) {
  if (!d_params.empty() && d_params.size() != spec.param_count())
    throw std::invalid_argument("mlp_backward: bad d_params count");
  const auto sizes = spec.layer_sizes();
  const std::size_t n_layers = sizes.size() - 1;
  const int batch = cache.batch;

  // Per-layer parameter offsets.
  std::vector<std::size_t> off(n_layers);
  {
    std::size_t o = 0;
    for (std::size_t l = 0; l < n_layers; ++l) {
      off[l] = o;
      o += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    }
  }

  std::vector<double> delta(dy, dy + static_cast<std::size_t>(batch) * spec.output);
  for (std::size_t l = n_layers; l-- > 0;) {
    const int in = sizes[l], out = sizes[l + 1];
    const double* prev = (l == 0) ? cache.input.data() : cache.act[l - 1].data();
    MapConstMat W(params.data() + off[l], out, in);
    MapConstMat A(prev, batch, in);
    MapMat D(delta.data(), batch, out);

    if (!d_params.empty()) {
      MapMat dW(d_params.data() + off[l], out, in);
      MapVec db(d_params.data() + off[l] + static_cast<std::size_t>(out) * in, out);
      dW.noalias() += D.transpose() * A;
      db.noalias() += D.colwise().sum().transpose();
    }
    if (l == 0) {
      if (dx) {
        MapMat dX(dx, batch, in);
        dX.noalias() = D * W;
      }
      break;
    }
    std::vector<double> down(static_cast<std::size_t>(batch) * in);
    MapMat dA(down.data(), batch, in);
    dA.noalias() = D * W;
    apply_act_grad(spec.hidden_act, prev, down.data(), down.size());
    delta = std::move(down);
  }
}

void mlp_init(const MlpSpec& spec, std::span<double> params, Rng& rng) {
  if (params.size() != spec.param_count())
    throw std::invalid_argument("mlp_init: bad param count");
  const auto sizes = spec.layer_sizes();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double lim = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < out * in; ++i)
      params[off + static_cast<std::size_t>(i)] = (2.0 * rng.next_double() - 1.0) * lim;
    off += static_cast<std::size_t>(out) * in;
    for (int i = 0; i < out; ++i) params[off + static_cast<std::size_t>(i)] = 0.0;
    off += static_cast<std::size_t>(out);
  }
}

}  // namespace sc

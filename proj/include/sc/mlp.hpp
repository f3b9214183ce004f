#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sc {

class Rng;

enum class Act { Tanh, Relu, Linear };

/// Small fully-connected network. Parameters are packed per layer as the
/// weight matrix (out x in, row-major) followed by the bias vector.
struct MlpSpec {
  int input = 1;
  std::vector<int> hidden;
  int output = 1;
  Act hidden_act = Act::Tanh;

  std::size_t param_count() const;
  std::vector<int> layer_sizes() const;  // input, hidden..., output
};

/// Post-activation values cached by forward for the backward pass.
struct MlpCache {
  std::vector<double> input;              // batch x in
  std::vector<std::vector<double>> act;   // batch x hidden[l]
  int batch = 0;
};

/// x: batch x in (row-major) -> y: batch x out. Pass a cache to enable
/// backward.
void mlp_forward(const MlpSpec& spec, std::span<const double> params, const double* x,
                 int batch, double* y, MlpCache* cache = nullptr);

/// Vector-Jacobian product. dy: batch x out. Writes dx (batch x in) unless
/// null; accumulates (+=) into d_params unless empty.
void mlp_backward(const MlpSpec& spec, std::span<const double> params, const MlpCache& cache,
                  const double* dy, double* dx, std::span<double> d_params);

/// Glorot-uniform weights, zero biases.
void mlp_init(const MlpSpec& spec, std::span<double> params, Rng& rng);

}  // namespace sc

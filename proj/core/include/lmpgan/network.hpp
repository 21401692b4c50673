#pragma once

#include <cstdint>
#include <vector>

#include "lmpgan/layers.hpp"
#include "lmpgan/rng.hpp"
#include "lmpgan/tensor.hpp"

namespace lmpgan::nn {

// Learned parameters plus batchnorm running statistics for one layer.
// Tensors are empty when the layer kind has no use for them.
struct LayerParams {
  Tensor weights;       // conv: [out][3][3][in]; transpose: [in][3][3][out];
                        // depthwise: [filters][3][3]; dense: [out][in]
  Tensor bias;          // [out] / [filters]
  Tensor gamma, beta;   // batchnorm scale/shift, [channels]
  Tensor running_mean;  // batchnorm inference stats, [channels]
  Tensor running_var;
};

struct NetworkState {
  std::vector<LayerParams> layers;
};

enum class Mode { Train, Infer };

// Everything backward needs from the matching forward pass.
struct LayerCache {
  Tensor input;
  Tensor output;     // tanh/sigmoid only
  Tensor mask;       // dropout
  Tensor mean, var;  // batchnorm batch statistics (train mode)
};

struct Cache {
  Mode mode = Mode::Infer;
  std::vector<LayerCache> layers;
  std::vector<std::size_t> input_shape;
};

struct LayerGrads {
  Tensor weights, bias, gamma, beta;
};

struct Grads {
  std::vector<LayerGrads> layers;
  Tensor input;  // gradient w.r.t. the network input
};

// Deterministic per seed: conv/dense weights ~ N(0, 0.02^2) truncated at
// two standard deviations, biases 0, gamma 1, beta 0.
NetworkState init_params(const NetworkSpec& spec, std::uint64_t seed);

// Trainable parameter count (weights, biases, gamma, beta).
std::size_t param_count(const NetworkSpec& spec);

// Runs the network. In train mode dropout is active (drawing from rng)
// and batchnorm uses batch statistics; in infer mode the pass is a pure
// function of (state, input). Fills *cache when given (required for
// backward).
Tensor forward(const NetworkSpec& spec, const NetworkState& state, const Tensor& input,
               Mode mode, Rng* rng, Cache* cache = nullptr);

// Gradients of a scalar loss with the given output gradient. cache must
// come from a train-mode forward on the same spec/state.
Grads backward(const NetworkSpec& spec, const NetworkState& state, const Cache& cache,
               const Tensor& output_grad);

// W <- W - lr * g for every parameter tensor. Throws NumericError naming
// the layer if a gradient is non-finite.
void sgd_step(NetworkState& state, const Grads& grads, double lr);

// Folds the batch statistics recorded in cache into the running averages:
// r <- momentum * r + (1 - momentum) * batch.
void update_running_stats(NetworkState& state, const NetworkSpec& spec, const Cache& cache,
                          double momentum = 0.99);

}  // namespace lmpgan::nn

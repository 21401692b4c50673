#pragma once

#include <string>
#include <vector>

#include "lmpgan/tensor.hpp"

namespace lmpgan::nn {

enum class LayerKind {
  Conv2d,
  Conv2dTranspose,
  Dense,
  BatchNorm,
  ReLU,
  LeakyReLU,
  Tanh,
  Sigmoid,
  Dropout,
  ConcatGrouped,
  Flatten,
};

enum class Padding { Valid, Same };

std::string layer_kind_name(LayerKind kind);

// All convolutions are 3x3 kernels with stride 1. A depthwise conv owns
// out_channels single-channel filters shared across input channels; each
// input channel yields one stack of out_channels maps, stored
// channel-major, so the layer emits in_channels * out_channels maps.
struct LayerSpec {
  LayerKind kind{};
  int in_channels = 0;   // dense: input features
  int out_channels = 0;  // dense: output features; depthwise: filters per channel
  Padding padding = Padding::Same;
  bool depthwise = false;
  double slope = 0.2;  // leaky_relu
  double rate = 0.3;   // dropout
  int channels = 0;    // batchnorm / concat_grouped channel count

  static LayerSpec conv2d(int in, int out, Padding pad, bool depthwise = false);
  static LayerSpec conv2d_transpose(int in, int out, Padding pad, bool depthwise = false);
  static LayerSpec dense(int in, int out);
  static LayerSpec batchnorm(int channels);
  static LayerSpec relu();
  static LayerSpec leaky_relu(double slope);
  static LayerSpec tanh_activation();
  static LayerSpec sigmoid();
  static LayerSpec dropout(double rate);
  static LayerSpec concat_grouped(int channels);
  static LayerSpec flatten();

  bool has_weights() const {
    return kind == LayerKind::Conv2d || kind == LayerKind::Conv2dTranspose ||
           kind == LayerKind::Dense;
  }
  bool has_batchnorm_params() const { return kind == LayerKind::BatchNorm; }

  std::string canonical() const;
  static LayerSpec parse(const std::string& line);
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  std::string canonical() const;  // newline-joined layer lines
  static NetworkSpec parse(const std::string& text);
};

// Output shape of each layer for the given input shape; validates
// compatibility and throws ConfigError naming the offending layer.
std::vector<std::vector<std::size_t>> infer_shapes(const NetworkSpec& spec,
                                                   const std::vector<std::size_t>& input);

}  // namespace lmpgan::nn

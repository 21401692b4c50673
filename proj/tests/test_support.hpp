#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lmpgan/gan.hpp"
#include "lmpgan/market_data.hpp"
#include "lmpgan/network.hpp"
#include "lmpgan/rng.hpp"
#include "lmpgan/tensor.hpp"

namespace testsupport {

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// Test-scale parameter fill: larger than the training init so ReLU
// pre-activations sit well away from the kink.
inline void randomize_params(lmpgan::nn::NetworkState& state, lmpgan::Rng& rng) {
  for (auto& layer : state.layers) {
    for (lmpgan::nn::Tensor* t : {&layer.weights, &layer.bias}) {
      for (auto& v : *t) v = rng.uniform(-0.6, 0.6);
    }
    for (auto& v : layer.gamma) v = rng.uniform(0.5, 1.5);
    for (auto& v : layer.beta) v = rng.uniform(-0.3, 0.3);
  }
}

inline lmpgan::nn::Tensor random_tensor(const std::vector<std::size_t>& shape,
                                        lmpgan::Rng& rng, double lo = -1.0, double hi = 1.0) {
  lmpgan::nn::Tensor t(shape);
  for (auto& v : t) v = rng.uniform(lo, hi);
  return t;
}

// Scalar probe loss: <forward(x), weighting>. The rng is copied for every
// evaluation so dropout masks are identical across FD probes.
inline double probe_loss(const lmpgan::nn::NetworkSpec& spec,
                         const lmpgan::nn::NetworkState& state, const lmpgan::nn::Tensor& x,
                         const lmpgan::nn::Tensor& weighting, const lmpgan::Rng& rng_proto) {
  lmpgan::Rng rng = rng_proto;
  lmpgan::nn::Tensor out =
      lmpgan::nn::forward(spec, state, x, lmpgan::nn::Mode::Train, &rng);
  return lmpgan::nn::dot(out, weighting);
}

// True when every ReLU-family pre-activation is at least `margin` from 0,
// so central differences stay on one side of the kink.
inline bool away_from_kinks(const lmpgan::nn::NetworkSpec& spec,
                            const lmpgan::nn::NetworkState& state, const lmpgan::nn::Tensor& x,
                            const lmpgan::Rng& rng_proto, double margin = 1e-3) {
  lmpgan::Rng rng = rng_proto;
  lmpgan::nn::Cache cache;
  lmpgan::nn::forward(spec, state, x, lmpgan::nn::Mode::Train, &rng, &cache);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto kind = spec.layers[i].kind;
    if (kind != lmpgan::nn::LayerKind::ReLU && kind != lmpgan::nn::LayerKind::LeakyReLU) {
      continue;
    }
    for (double v : cache.layers[i].input) {
      if (std::abs(v) < margin) return false;
    }
  }
  return true;
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t entries = 0;
};

// Central-difference check of every parameter and input gradient.
inline GradCheck check_gradients(const lmpgan::nn::NetworkSpec& spec,
                                 lmpgan::nn::NetworkState& state, lmpgan::nn::Tensor& x,
                                 const lmpgan::nn::Tensor& weighting,
                                 const lmpgan::Rng& rng_proto, double h = 1e-5) {
  using lmpgan::nn::Tensor;
  GradCheck result;

  lmpgan::Rng rng = rng_proto;
  lmpgan::nn::Cache cache;
  lmpgan::nn::forward(spec, state, x, lmpgan::nn::Mode::Train, &rng, &cache);
  lmpgan::nn::Grads grads = lmpgan::nn::backward(spec, state, cache, weighting);

  auto probe = [&](double& slot) {
    const double orig = slot;
    slot = orig + h;
    const double up = probe_loss(spec, state, x, weighting, rng_proto);
    slot = orig - h;
    const double down = probe_loss(spec, state, x, weighting, rng_proto);
    slot = orig;
    return (up - down) / (2.0 * h);
  };

  auto check_tensor = [&](Tensor& param, const Tensor& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double numeric = probe(param[i]);
      result.max_rel = std::max(result.max_rel, rel_err(grad[i], numeric));
      ++result.entries;
    }
  };

  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (!grads.layers[l].weights.empty()) {
      check_tensor(state.layers[l].weights, grads.layers[l].weights);
      check_tensor(state.layers[l].bias, grads.layers[l].bias);
    }
    if (!grads.layers[l].gamma.empty()) {
      check_tensor(state.layers[l].gamma, grads.layers[l].gamma);
      check_tensor(state.layers[l].beta, grads.layers[l].beta);
    }
  }
  check_tensor(x, grads.input);
  return result;
}

// Small raw video for market_data tests: value(zone, hour, channel) is a
// smooth deterministic function.
inline lmpgan::MarketVideo tiny_video(int rows, int cols, int hours, int channels = 3,
                                      std::int64_t start_ts = 1483228800) {
  lmpgan::MarketVideo video;
  video.layout.rows = rows;
  video.layout.cols = cols;
  for (int z = 0; z < rows * cols; ++z) video.layout.zone_order.push_back("Z" + std::to_string(z));
  video.features = {"RTLMP", "DALMP", "DEMAND"};
  video.features.resize(static_cast<std::size_t>(channels));
  for (int h = 0; h < hours; ++h) {
    lmpgan::MarketFrame frame;
    frame.timestamp = start_ts + static_cast<std::int64_t>(h) * lmpgan::kHourSeconds;
    frame.values = lmpgan::nn::Tensor({static_cast<std::size_t>(rows),
                                       static_cast<std::size_t>(cols),
                                       static_cast<std::size_t>(channels)});
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        for (int c = 0; c < channels; ++c) {
          frame.values.at3(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                           static_cast<std::size_t>(c)) =
              20.0 + 3.0 * h + 2.0 * (i * cols + j) + 0.5 * c + 0.1 * h * c;
        }
      }
    }
    video.frames.push_back(std::move(frame));
  }
  return video;
}

}  // namespace testsupport

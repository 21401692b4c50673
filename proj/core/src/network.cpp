#include "lmpgan/network.hpp"

#include <cmath>
#include <string>

#include "lmpgan/errors.hpp"

namespace lmpgan::nn {

namespace {

constexpr int kKernel = 3;
constexpr double kBnEps = 1e-8;
constexpr double kInitStd = 0.02;

int pad_of(const LayerSpec& layer) { return layer.padding == Padding::Same ? 1 : 0; }

// ---- standard conv2d ----

Tensor conv_forward(const LayerSpec& layer, const LayerParams& params, const Tensor& x) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t Co = static_cast<std::size_t>(layer.out_channels);
  const int pad = pad_of(layer);
  const std::size_t Ho = (pad == 1) ? H : H - 2;
  const std::size_t Wo = (pad == 1) ? W : W - 2;
  Tensor y({B, Ho, Wo, Co});
  const double* wp = params.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < Ho; ++io) {
      for (std::size_t jo = 0; jo < Wo; ++jo) {
        double* yrow = y.data() + y.offset4(b, io, jo, 0);
        for (std::size_t o = 0; o < Co; ++o) yrow[o] = params.bias[o];
        for (int ki = 0; ki < kKernel; ++ki) {
          const long i = static_cast<long>(io) + ki - pad;
          if (i < 0 || i >= static_cast<long>(H)) continue;
          for (int kj = 0; kj < kKernel; ++kj) {
            const long j = static_cast<long>(jo) + kj - pad;
            if (j < 0 || j >= static_cast<long>(W)) continue;
            const double* xrow = x.data() + x.offset4(b, i, j, 0);
            for (std::size_t o = 0; o < Co; ++o) {
              const double* wrow = wp + ((o * kKernel + ki) * kKernel + kj) * Ci;
              double acc = 0.0;
              for (std::size_t c = 0; c < Ci; ++c) acc += wrow[c] * xrow[c];
              yrow[o] += acc;
            }
          }
        }
      }
    }
  }
  return y;
}

void conv_backward(const LayerSpec& layer, const LayerParams& params, const Tensor& x,
                   const Tensor& g, Tensor& dx, LayerGrads& lg) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t Ho = g.dim(1), Wo = g.dim(2), Co = g.dim(3);
  const int pad = pad_of(layer);
  dx = Tensor::zeros_like(x);
  lg.weights = Tensor::zeros_like(params.weights);
  lg.bias = Tensor::zeros_like(params.bias);
  const double* wp = params.weights.data();
  double* dwp = lg.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < Ho; ++io) {
      for (std::size_t jo = 0; jo < Wo; ++jo) {
        const double* grow = g.data() + g.offset4(b, io, jo, 0);
        for (std::size_t o = 0; o < Co; ++o) {
          const double coeff = grow[o];
          lg.bias[o] += coeff;
          if (coeff == 0.0) continue;
          for (int ki = 0; ki < kKernel; ++ki) {
            const long i = static_cast<long>(io) + ki - pad;
            if (i < 0 || i >= static_cast<long>(H)) continue;
            for (int kj = 0; kj < kKernel; ++kj) {
              const long j = static_cast<long>(jo) + kj - pad;
              if (j < 0 || j >= static_cast<long>(W)) continue;
              const double* xrow = x.data() + x.offset4(b, i, j, 0);
              double* dxrow = dx.data() + dx.offset4(b, i, j, 0);
              const double* wrow = wp + ((o * kKernel + ki) * kKernel + kj) * Ci;
              double* dwrow = dwp + ((o * kKernel + ki) * kKernel + kj) * Ci;
              for (std::size_t c = 0; c < Ci; ++c) {
                dxrow[c] += coeff * wrow[c];
                dwrow[c] += coeff * xrow[c];
              }
            }
          }
        }
      }
    }
  }
}

// ---- conv2d_transpose (exact adjoint of conv2d; weights [in][3][3][out]) ----

Tensor convt_forward(const LayerSpec& layer, const LayerParams& params, const Tensor& x) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t Co = static_cast<std::size_t>(layer.out_channels);
  const int pad = pad_of(layer);
  const std::size_t Ho = (pad == 1) ? H : H + 2;
  const std::size_t Wo = (pad == 1) ? W : W + 2;
  Tensor y({B, Ho, Wo, Co});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        double* yrow = y.data() + y.offset4(b, i, j, 0);
        for (std::size_t o = 0; o < Co; ++o) yrow[o] = params.bias[o];
      }
    }
  }
  const double* wp = params.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < H; ++io) {
      for (std::size_t jo = 0; jo < W; ++jo) {
        const double* xrow = x.data() + x.offset4(b, io, jo, 0);
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          const double coeff = xrow[ci];
          if (coeff == 0.0) continue;
          for (int ki = 0; ki < kKernel; ++ki) {
            const long i = static_cast<long>(io) + ki - pad;
            if (i < 0 || i >= static_cast<long>(Ho)) continue;
            for (int kj = 0; kj < kKernel; ++kj) {
              const long j = static_cast<long>(jo) + kj - pad;
              if (j < 0 || j >= static_cast<long>(Wo)) continue;
              double* yrow = y.data() + y.offset4(b, i, j, 0);
              const double* wrow = wp + ((ci * kKernel + ki) * kKernel + kj) * Co;
              for (std::size_t o = 0; o < Co; ++o) yrow[o] += coeff * wrow[o];
            }
          }
        }
      }
    }
  }
  return y;
}

void convt_backward(const LayerSpec& layer, const LayerParams& params, const Tensor& x,
                    const Tensor& g, Tensor& dx, LayerGrads& lg) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t Ho = g.dim(1), Wo = g.dim(2), Co = g.dim(3);
  const int pad = pad_of(layer);
  dx = Tensor::zeros_like(x);
  lg.weights = Tensor::zeros_like(params.weights);
  lg.bias = Tensor::zeros_like(params.bias);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        const double* grow = g.data() + g.offset4(b, i, j, 0);
        for (std::size_t o = 0; o < Co; ++o) lg.bias[o] += grow[o];
      }
    }
  }
  const double* wp = params.weights.data();
  double* dwp = lg.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < H; ++io) {
      for (std::size_t jo = 0; jo < W; ++jo) {
        const double* xrow = x.data() + x.offset4(b, io, jo, 0);
        double* dxrow = dx.data() + dx.offset4(b, io, jo, 0);
        for (std::size_t ci = 0; ci < Ci; ++ci) {
          const double xv = xrow[ci];
          double acc = 0.0;
          for (int ki = 0; ki < kKernel; ++ki) {
            const long i = static_cast<long>(io) + ki - pad;
            if (i < 0 || i >= static_cast<long>(Ho)) continue;
            for (int kj = 0; kj < kKernel; ++kj) {
              const long j = static_cast<long>(jo) + kj - pad;
              if (j < 0 || j >= static_cast<long>(Wo)) continue;
              const double* grow = g.data() + g.offset4(b, i, j, 0);
              const double* wrow = wp + ((ci * kKernel + ki) * kKernel + kj) * Co;
              double* dwrow = dwp + ((ci * kKernel + ki) * kKernel + kj) * Co;
              for (std::size_t o = 0; o < Co; ++o) {
                acc += wrow[o] * grow[o];
                dwrow[o] += xv * grow[o];
              }
            }
          }
          dxrow[ci] += acc;
        }
      }
    }
  }
}

// ---- depthwise variants: out_channels filters shared across inputs,
// output channel (c, f) stored at c * filters + f ----

Tensor conv_dw_forward(const LayerSpec& layer, const LayerParams& params, const Tensor& x) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t F = static_cast<std::size_t>(layer.out_channels);
  const int pad = pad_of(layer);
  const std::size_t Ho = (pad == 1) ? H : H - 2;
  const std::size_t Wo = (pad == 1) ? W : W - 2;
  Tensor y({B, Ho, Wo, Ci * F});
  const double* wp = params.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < Ho; ++io) {
      for (std::size_t jo = 0; jo < Wo; ++jo) {
        double* yrow = y.data() + y.offset4(b, io, jo, 0);
        for (std::size_t c = 0; c < Ci; ++c) {
          for (std::size_t f = 0; f < F; ++f) yrow[c * F + f] = params.bias[f];
        }
        for (int ki = 0; ki < kKernel; ++ki) {
          const long i = static_cast<long>(io) + ki - pad;
          if (i < 0 || i >= static_cast<long>(H)) continue;
          for (int kj = 0; kj < kKernel; ++kj) {
            const long j = static_cast<long>(jo) + kj - pad;
            if (j < 0 || j >= static_cast<long>(W)) continue;
            const double* xrow = x.data() + x.offset4(b, i, j, 0);
            for (std::size_t f = 0; f < F; ++f) {
              const double w = wp[(f * kKernel + ki) * kKernel + kj];
              for (std::size_t c = 0; c < Ci; ++c) yrow[c * F + f] += w * xrow[c];
            }
          }
        }
      }
    }
  }
  return y;
}

void conv_dw_backward(const LayerSpec& layer, const LayerParams& params, const Tensor& x,
                      const Tensor& g, Tensor& dx, LayerGrads& lg) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t Ho = g.dim(1), Wo = g.dim(2);
  const std::size_t F = static_cast<std::size_t>(layer.out_channels);
  const int pad = pad_of(layer);
  dx = Tensor::zeros_like(x);
  lg.weights = Tensor::zeros_like(params.weights);
  lg.bias = Tensor::zeros_like(params.bias);
  const double* wp = params.weights.data();
  double* dwp = lg.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < Ho; ++io) {
      for (std::size_t jo = 0; jo < Wo; ++jo) {
        const double* grow = g.data() + g.offset4(b, io, jo, 0);
        for (std::size_t c = 0; c < Ci; ++c) {
          for (std::size_t f = 0; f < F; ++f) lg.bias[f] += grow[c * F + f];
        }
        for (int ki = 0; ki < kKernel; ++ki) {
          const long i = static_cast<long>(io) + ki - pad;
          if (i < 0 || i >= static_cast<long>(H)) continue;
          for (int kj = 0; kj < kKernel; ++kj) {
            const long j = static_cast<long>(jo) + kj - pad;
            if (j < 0 || j >= static_cast<long>(W)) continue;
            const double* xrow = x.data() + x.offset4(b, i, j, 0);
            double* dxrow = dx.data() + dx.offset4(b, i, j, 0);
            for (std::size_t f = 0; f < F; ++f) {
              const double w = wp[(f * kKernel + ki) * kKernel + kj];
              double dwacc = 0.0;
              for (std::size_t c = 0; c < Ci; ++c) {
                const double gv = grow[c * F + f];
                dxrow[c] += w * gv;
                dwacc += xrow[c] * gv;
              }
              dwp[(f * kKernel + ki) * kKernel + kj] += dwacc;
            }
          }
        }
      }
    }
  }
}

Tensor convt_dw_forward(const LayerSpec& layer, const LayerParams& params, const Tensor& x) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t F = static_cast<std::size_t>(layer.out_channels);
  const int pad = pad_of(layer);
  const std::size_t Ho = (pad == 1) ? H : H + 2;
  const std::size_t Wo = (pad == 1) ? W : W + 2;
  Tensor y({B, Ho, Wo, Ci * F});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        double* yrow = y.data() + y.offset4(b, i, j, 0);
        for (std::size_t c = 0; c < Ci; ++c) {
          for (std::size_t f = 0; f < F; ++f) yrow[c * F + f] = params.bias[f];
        }
      }
    }
  }
  const double* wp = params.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < H; ++io) {
      for (std::size_t jo = 0; jo < W; ++jo) {
        const double* xrow = x.data() + x.offset4(b, io, jo, 0);
        for (int ki = 0; ki < kKernel; ++ki) {
          const long i = static_cast<long>(io) + ki - pad;
          if (i < 0 || i >= static_cast<long>(Ho)) continue;
          for (int kj = 0; kj < kKernel; ++kj) {
            const long j = static_cast<long>(jo) + kj - pad;
            if (j < 0 || j >= static_cast<long>(Wo)) continue;
            double* yrow = y.data() + y.offset4(b, i, j, 0);
            for (std::size_t f = 0; f < F; ++f) {
              const double w = wp[(f * kKernel + ki) * kKernel + kj];
              for (std::size_t c = 0; c < Ci; ++c) yrow[c * F + f] += w * xrow[c];
            }
          }
        }
      }
    }
  }
  return y;
}

void convt_dw_backward(const LayerSpec& layer, const LayerParams& params, const Tensor& x,
                       const Tensor& g, Tensor& dx, LayerGrads& lg) {
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), Ci = x.dim(3);
  const std::size_t Ho = g.dim(1), Wo = g.dim(2);
  const std::size_t F = static_cast<std::size_t>(layer.out_channels);
  const int pad = pad_of(layer);
  dx = Tensor::zeros_like(x);
  lg.weights = Tensor::zeros_like(params.weights);
  lg.bias = Tensor::zeros_like(params.bias);
  const double* wp = params.weights.data();
  double* dwp = lg.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        const double* grow = g.data() + g.offset4(b, i, j, 0);
        for (std::size_t c = 0; c < Ci; ++c) {
          for (std::size_t f = 0; f < F; ++f) lg.bias[f] += grow[c * F + f];
        }
      }
    }
  }
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t io = 0; io < H; ++io) {
      for (std::size_t jo = 0; jo < W; ++jo) {
        const double* xrow = x.data() + x.offset4(b, io, jo, 0);
        double* dxrow = dx.data() + dx.offset4(b, io, jo, 0);
        for (int ki = 0; ki < kKernel; ++ki) {
          const long i = static_cast<long>(io) + ki - pad;
          if (i < 0 || i >= static_cast<long>(Ho)) continue;
          for (int kj = 0; kj < kKernel; ++kj) {
            const long j = static_cast<long>(jo) + kj - pad;
            if (j < 0 || j >= static_cast<long>(Wo)) continue;
            const double* grow = g.data() + g.offset4(b, i, j, 0);
            for (std::size_t f = 0; f < F; ++f) {
              const double w = wp[(f * kKernel + ki) * kKernel + kj];
              double dwacc = 0.0;
              for (std::size_t c = 0; c < Ci; ++c) {
                const double gv = grow[c * F + f];
                dxrow[c] += w * gv;
                dwacc += xrow[c] * gv;
              }
              dwp[(f * kKernel + ki) * kKernel + kj] += dwacc;
            }
          }
        }
      }
    }
  }
}

// ---- dense ----

Tensor dense_forward(const LayerSpec& layer, const LayerParams& params, const Tensor& x) {
  const std::size_t B = x.dim(0);
  const std::size_t In = static_cast<std::size_t>(layer.in_channels);
  const std::size_t Out = static_cast<std::size_t>(layer.out_channels);
  Tensor y({B, Out});
  const double* wp = params.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    const double* xrow = x.data() + b * In;
    double* yrow = y.data() + b * Out;
    for (std::size_t o = 0; o < Out; ++o) {
      const double* wrow = wp + o * In;
      double acc = params.bias[o];
      for (std::size_t i = 0; i < In; ++i) acc += wrow[i] * xrow[i];
      yrow[o] = acc;
    }
  }
  return y;
}

void dense_backward(const LayerSpec& layer, const LayerParams& params, const Tensor& x,
                    const Tensor& g, Tensor& dx, LayerGrads& lg) {
  const std::size_t B = x.dim(0);
  const std::size_t In = static_cast<std::size_t>(layer.in_channels);
  const std::size_t Out = static_cast<std::size_t>(layer.out_channels);
  dx = Tensor::zeros_like(x);
  lg.weights = Tensor::zeros_like(params.weights);
  lg.bias = Tensor::zeros_like(params.bias);
  const double* wp = params.weights.data();
  double* dwp = lg.weights.data();
  for (std::size_t b = 0; b < B; ++b) {
    const double* xrow = x.data() + b * In;
    const double* grow = g.data() + b * Out;
    double* dxrow = dx.data() + b * In;
    for (std::size_t o = 0; o < Out; ++o) {
      const double gv = grow[o];
      lg.bias[o] += gv;
      if (gv == 0.0) continue;
      const double* wrow = wp + o * In;
      double* dwrow = dwp + o * In;
      for (std::size_t i = 0; i < In; ++i) {
        dxrow[i] += gv * wrow[i];
        dwrow[i] += gv * xrow[i];
      }
    }
  }
}

// ---- batchnorm ----

std::size_t bn_group_size(const Tensor& x, std::size_t channels) {
  return x.size() / channels;
}

Tensor bn_forward_train(const LayerSpec& layer, const LayerParams& params, const Tensor& x,
                        LayerCache& cache) {
  const std::size_t C = static_cast<std::size_t>(layer.channels);
  const std::size_t m = bn_group_size(x, C);
  Tensor mean({C}), var({C});
  const double* xp = x.data();
  for (std::size_t idx = 0; idx < x.size(); ++idx) mean[idx % C] += xp[idx];
  for (std::size_t c = 0; c < C; ++c) mean[c] /= static_cast<double>(m);
  for (std::size_t idx = 0; idx < x.size(); ++idx) {
    const double d = xp[idx] - mean[idx % C];
    var[idx % C] += d * d;
  }
  for (std::size_t c = 0; c < C; ++c) var[c] /= static_cast<double>(m);

  Tensor y(x.shape());
  for (std::size_t idx = 0; idx < x.size(); ++idx) {
    const std::size_t c = idx % C;
    const double xhat = (xp[idx] - mean[c]) / std::sqrt(var[c] + kBnEps);
    y[idx] = params.gamma[c] * xhat + params.beta[c];
  }
  cache.mean = std::move(mean);
  cache.var = std::move(var);
  return y;
}

Tensor bn_forward_infer(const LayerSpec& layer, const LayerParams& params, const Tensor& x) {
  const std::size_t C = static_cast<std::size_t>(layer.channels);
  Tensor y(x.shape());
  const double* xp = x.data();
  for (std::size_t idx = 0; idx < x.size(); ++idx) {
    const std::size_t c = idx % C;
    const double xhat =
        (xp[idx] - params.running_mean[c]) / std::sqrt(params.running_var[c] + kBnEps);
    y[idx] = params.gamma[c] * xhat + params.beta[c];
  }
  return y;
}

void bn_backward(const LayerSpec& layer, const LayerParams& params, const LayerCache& cache,
                 const Tensor& g, Tensor& dx, LayerGrads& lg) {
  const std::size_t C = static_cast<std::size_t>(layer.channels);
  const Tensor& x = cache.input;
  const std::size_t m = bn_group_size(x, C);
  lg.gamma = Tensor({C});
  lg.beta = Tensor({C});
  const double* xp = x.data();
  const double* gp = g.data();
  std::vector<double> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(cache.var[c] + kBnEps);
  for (std::size_t idx = 0; idx < x.size(); ++idx) {
    const std::size_t c = idx % C;
    const double xhat = (xp[idx] - cache.mean[c]) * inv_std[c];
    lg.gamma[c] += gp[idx] * xhat;
    lg.beta[c] += gp[idx];
  }
  dx = Tensor(x.shape());
  const double md = static_cast<double>(m);
  for (std::size_t idx = 0; idx < x.size(); ++idx) {
    const std::size_t c = idx % C;
    const double xhat = (xp[idx] - cache.mean[c]) * inv_std[c];
    dx[idx] = params.gamma[c] * inv_std[c] *
              (gp[idx] - lg.beta[c] / md - xhat * lg.gamma[c] / md);
  }
}

}  // namespace

NetworkState init_params(const NetworkSpec& spec, std::uint64_t seed) {
  Rng rng(seed, /*stream=*/0x494e4954);  // "INIT"
  NetworkState state;
  state.layers.resize(spec.layers.size());
  for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
    const LayerSpec& layer = spec.layers[idx];
    LayerParams& p = state.layers[idx];
    auto draw = [&](Tensor& t) {
      for (auto& v : t) v = rng.truncated_normal(kInitStd, 2.0 * kInitStd);
    };
    switch (layer.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Conv2dTranspose: {
        const std::size_t in = static_cast<std::size_t>(layer.in_channels);
        const std::size_t out = static_cast<std::size_t>(layer.out_channels);
        if (layer.depthwise) {
          p.weights = Tensor({out, 3, 3});
        } else if (layer.kind == LayerKind::Conv2d) {
          p.weights = Tensor({out, 3, 3, in});
        } else {
          p.weights = Tensor({in, 3, 3, out});
        }
        draw(p.weights);
        p.bias = Tensor({out});
        break;
      }
      case LayerKind::Dense:
        p.weights = Tensor({static_cast<std::size_t>(layer.out_channels),
                            static_cast<std::size_t>(layer.in_channels)});
        draw(p.weights);
        p.bias = Tensor({static_cast<std::size_t>(layer.out_channels)});
        break;
      case LayerKind::BatchNorm: {
        const std::size_t c = static_cast<std::size_t>(layer.channels);
        p.gamma = Tensor({c});
        p.gamma.fill(1.0);
        p.beta = Tensor({c});
        p.running_mean = Tensor({c});
        p.running_var = Tensor({c});
        p.running_var.fill(1.0);
        break;
      }
      default:
        break;
    }
  }
  return state;
}

std::size_t param_count(const NetworkSpec& spec) {
  std::size_t count = 0;
  for (const auto& layer : spec.layers) {
    switch (layer.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Conv2dTranspose:
        if (layer.depthwise) {
          count += static_cast<std::size_t>(layer.out_channels) * 9;
        } else {
          count += static_cast<std::size_t>(layer.in_channels) *
                   static_cast<std::size_t>(layer.out_channels) * 9;
        }
        count += static_cast<std::size_t>(layer.out_channels);
        break;
      case LayerKind::Dense:
        count += static_cast<std::size_t>(layer.in_channels) *
                     static_cast<std::size_t>(layer.out_channels) +
                 static_cast<std::size_t>(layer.out_channels);
        break;
      case LayerKind::BatchNorm:
        count += 2 * static_cast<std::size_t>(layer.channels);
        break;
      default:
        break;
    }
  }
  return count;
}

Tensor forward(const NetworkSpec& spec, const NetworkState& state, const Tensor& input,
               Mode mode, Rng* rng, Cache* cache) {
  infer_shapes(spec, input.shape());  // validates, throws with layer index
  if (cache) {
    cache->mode = mode;
    cache->layers.assign(spec.layers.size(), {});
    cache->input_shape = input.shape();
  }
  Tensor cur = input;
  for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
    const LayerSpec& layer = spec.layers[idx];
    const LayerParams& params = state.layers[idx];
    LayerCache scratch;
    LayerCache& lc = cache ? cache->layers[idx] : scratch;
    Tensor next;
    switch (layer.kind) {
      case LayerKind::Conv2d:
        if (cache) lc.input = cur;
        next = layer.depthwise ? conv_dw_forward(layer, params, cur)
                               : conv_forward(layer, params, cur);
        break;
      case LayerKind::Conv2dTranspose:
        if (cache) lc.input = cur;
        next = layer.depthwise ? convt_dw_forward(layer, params, cur)
                               : convt_forward(layer, params, cur);
        break;
      case LayerKind::Dense:
        if (cache) lc.input = cur;
        next = dense_forward(layer, params, cur);
        break;
      case LayerKind::BatchNorm:
        if (mode == Mode::Train) {
          lc.input = cur;
          next = bn_forward_train(layer, params, cur, lc);
        } else {
          next = bn_forward_infer(layer, params, cur);
        }
        break;
      case LayerKind::ReLU: {
        if (cache) lc.input = cur;
        next = cur;
        for (auto& v : next) v = v > 0.0 ? v : 0.0;
        break;
      }
      case LayerKind::LeakyReLU: {
        if (cache) lc.input = cur;
        next = cur;
        for (auto& v : next) v = v > 0.0 ? v : layer.slope * v;
        break;
      }
      case LayerKind::Tanh: {
        next = cur;
        for (auto& v : next) v = std::tanh(v);
        if (cache) lc.output = next;
        break;
      }
      case LayerKind::Sigmoid: {
        next = cur;
        for (auto& v : next) v = 1.0 / (1.0 + std::exp(-v));
        if (cache) lc.output = next;
        break;
      }
      case LayerKind::Dropout: {
        if (mode == Mode::Train && layer.rate > 0.0) {
          if (!rng) {
            throw ConfigError("layer " + std::to_string(idx) +
                              " (dropout): train-mode forward requires an rng");
          }
          const double keep = 1.0 - layer.rate;
          Tensor mask(cur.shape());
          for (auto& m : mask) m = rng->uniform() < keep ? 1.0 / keep : 0.0;
          next = cur;
          for (std::size_t i = 0; i < next.size(); ++i) next[i] *= mask[i];
          lc.mask = std::move(mask);
        } else {
          next = cur;
        }
        break;
      }
      case LayerKind::ConcatGrouped:
        next = cur;  // grouped maps are already stored channel-major
        break;
      case LayerKind::Flatten: {
        std::size_t flat = 1;
        for (std::size_t i = 1; i < cur.rank(); ++i) flat *= cur.dim(i);
        if (cache) lc.input = cur;
        next = cur.reshaped({cur.dim(0), flat});
        break;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Grads backward(const NetworkSpec& spec, const NetworkState& state, const Cache& cache,
               const Tensor& output_grad) {
  if (cache.mode != Mode::Train || cache.layers.size() != spec.layers.size()) {
    throw ConfigError("backward requires a cache from a matching train-mode forward");
  }
  Grads grads;
  grads.layers.resize(spec.layers.size());
  Tensor g = output_grad;
  for (std::size_t n = spec.layers.size(); n-- > 0;) {
    const LayerSpec& layer = spec.layers[n];
    const LayerParams& params = state.layers[n];
    const LayerCache& lc = cache.layers[n];
    LayerGrads& lg = grads.layers[n];
    Tensor dx;
    switch (layer.kind) {
      case LayerKind::Conv2d:
        if (layer.depthwise) {
          conv_dw_backward(layer, params, lc.input, g, dx, lg);
        } else {
          conv_backward(layer, params, lc.input, g, dx, lg);
        }
        break;
      case LayerKind::Conv2dTranspose:
        if (layer.depthwise) {
          convt_dw_backward(layer, params, lc.input, g, dx, lg);
        } else {
          convt_backward(layer, params, lc.input, g, dx, lg);
        }
        break;
      case LayerKind::Dense:
        dense_backward(layer, params, lc.input, g, dx, lg);
        break;
      case LayerKind::BatchNorm:
        if (lc.mean.empty()) {
          throw ConfigError("layer " + std::to_string(n) +
                            " (batchnorm): cache is stale or from infer mode");
        }
        bn_backward(layer, params, lc, g, dx, lg);
        break;
      case LayerKind::ReLU:
        dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) {
          if (lc.input[i] <= 0.0) dx[i] = 0.0;
        }
        break;
      case LayerKind::LeakyReLU:
        dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) {
          if (lc.input[i] <= 0.0) dx[i] *= layer.slope;
        }
        break;
      case LayerKind::Tanh:
        dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] *= 1.0 - lc.output[i] * lc.output[i];
        }
        break;
      case LayerKind::Sigmoid:
        dx = g;
        for (std::size_t i = 0; i < dx.size(); ++i) {
          dx[i] *= lc.output[i] * (1.0 - lc.output[i]);
        }
        break;
      case LayerKind::Dropout:
        dx = g;
        if (!lc.mask.empty()) {
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= lc.mask[i];
        }
        break;
      case LayerKind::ConcatGrouped:
        dx = g;
        break;
      case LayerKind::Flatten:
        dx = g.reshaped(lc.input.shape());
        break;
    }
    g = std::move(dx);
  }
  grads.input = std::move(g);
  return grads;
}

void sgd_step(NetworkState& state, const Grads& grads, double lr) {
  if (state.layers.size() != grads.layers.size()) {
    throw ConfigError("sgd_step: state and gradients have different layer counts");
  }
  for (std::size_t idx = 0; idx < state.layers.size(); ++idx) {
    auto apply = [&](Tensor& param, const Tensor& grad, const char* what) {
      if (grad.empty()) return;
      if (!grad.all_finite()) {
        throw NumericError("non-finite " + std::string(what) + " gradient at layer " +
                           std::to_string(idx));
      }
      for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
    };
    apply(state.layers[idx].weights, grads.layers[idx].weights, "weight");
    apply(state.layers[idx].bias, grads.layers[idx].bias, "bias");
    apply(state.layers[idx].gamma, grads.layers[idx].gamma, "gamma");
    apply(state.layers[idx].beta, grads.layers[idx].beta, "beta");
  }
}

void update_running_stats(NetworkState& state, const NetworkSpec& spec, const Cache& cache,
                          double momentum) {
  for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
    if (spec.layers[idx].kind != LayerKind::BatchNorm) continue;
    const LayerCache& lc = cache.layers[idx];
    if (lc.mean.empty()) continue;
    LayerParams& p = state.layers[idx];
    for (std::size_t c = 0; c < p.running_mean.size(); ++c) {
      p.running_mean[c] = momentum * p.running_mean[c] + (1.0 - momentum) * lc.mean[c];
      p.running_var[c] = momentum * p.running_var[c] + (1.0 - momentum) * lc.var[c];
    }
  }
}

}  // namespace lmpgan::nn

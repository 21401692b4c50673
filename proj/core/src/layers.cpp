#include "lmpgan/layers.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include "lmpgan/errors.hpp"

namespace lmpgan::nn {

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::Conv2dTranspose: return "conv2d_transpose";
    case LayerKind::Dense: return "dense";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::ReLU: return "relu";
    case LayerKind::LeakyReLU: return "leaky_relu";
    case LayerKind::Tanh: return "tanh";
    case LayerKind::Sigmoid: return "sigmoid";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::ConcatGrouped: return "concat_grouped";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

LayerSpec LayerSpec::conv2d(int in, int out, Padding pad, bool depthwise) {
  if (in <= 0 || out <= 0) throw ConfigError("conv2d needs positive channel counts");
  LayerSpec s;
  s.kind = LayerKind::Conv2d;
  s.in_channels = in;
  s.out_channels = out;
  s.padding = pad;
  s.depthwise = depthwise;
  return s;
}

LayerSpec LayerSpec::conv2d_transpose(int in, int out, Padding pad, bool depthwise) {
  if (in <= 0 || out <= 0) throw ConfigError("conv2d_transpose needs positive channel counts");
  LayerSpec s;
  s.kind = LayerKind::Conv2dTranspose;
  s.in_channels = in;
  s.out_channels = out;
  s.padding = pad;
  s.depthwise = depthwise;
  return s;
}

LayerSpec LayerSpec::dense(int in, int out) {
  if (in <= 0 || out <= 0) throw ConfigError("dense needs positive feature counts");
  LayerSpec s;
  s.kind = LayerKind::Dense;
  s.in_channels = in;
  s.out_channels = out;
  return s;
}

LayerSpec LayerSpec::batchnorm(int channels) {
  if (channels <= 0) throw ConfigError("batchnorm needs a positive channel count");
  LayerSpec s;
  s.kind = LayerKind::BatchNorm;
  s.channels = channels;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::ReLU;
  return s;
}

LayerSpec LayerSpec::leaky_relu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::LeakyReLU;
  s.slope = slope;
  return s;
}

LayerSpec LayerSpec::tanh_activation() {
  LayerSpec s;
  s.kind = LayerKind::Tanh;
  return s;
}

LayerSpec LayerSpec::sigmoid() {
  LayerSpec s;
  s.kind = LayerKind::Sigmoid;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0, 1)");
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::concat_grouped(int channels) {
  if (channels <= 0) throw ConfigError("concat_grouped needs a positive channel count");
  LayerSpec s;
  s.kind = LayerKind::ConcatGrouped;
  s.channels = channels;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::Flatten;
  return s;
}

std::string LayerSpec::canonical() const {
  char buf[160];
  switch (kind) {
    case LayerKind::Conv2d:
    case LayerKind::Conv2dTranspose:
      std::snprintf(buf, sizeof(buf), "%s in=%d out=%d pad=%s depthwise=%d",
                    layer_kind_name(kind).c_str(), in_channels, out_channels,
                    padding == Padding::Same ? "same" : "valid", depthwise ? 1 : 0);
      return buf;
    case LayerKind::Dense:
      std::snprintf(buf, sizeof(buf), "dense in=%d out=%d", in_channels, out_channels);
      return buf;
    case LayerKind::BatchNorm:
      std::snprintf(buf, sizeof(buf), "batchnorm ch=%d", channels);
      return buf;
    case LayerKind::LeakyReLU:
      std::snprintf(buf, sizeof(buf), "leaky_relu slope=%.17g", slope);
      return buf;
    case LayerKind::Dropout:
      std::snprintf(buf, sizeof(buf), "dropout rate=%.17g", rate);
      return buf;
    case LayerKind::ConcatGrouped:
      std::snprintf(buf, sizeof(buf), "concat_grouped ch=%d", channels);
      return buf;
    default:
      return layer_kind_name(kind);
  }
}

namespace {

std::map<std::string, std::string> parse_kv(std::istringstream& ss) {
  std::map<std::string, std::string> kv;
  std::string tok;
  while (ss >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw DataError("bad layer attribute '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

int kv_int(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("missing layer attribute '" + key + "'");
  return std::stoi(it->second);
}

double kv_double(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("missing layer attribute '" + key + "'");
  return std::stod(it->second);
}

}  // namespace

LayerSpec LayerSpec::parse(const std::string& line) {
  std::istringstream ss(line);
  std::string name;
  ss >> name;
  if (name == "conv2d" || name == "conv2d_transpose") {
    auto kv = parse_kv(ss);
    auto it = kv.find("pad");
    if (it == kv.end()) throw DataError("conv layer missing pad attribute");
    Padding pad = it->second == "same" ? Padding::Same : Padding::Valid;
    bool dw = kv.count("depthwise") ? kv_int(kv, "depthwise") != 0 : false;
    return name == "conv2d" ? conv2d(kv_int(kv, "in"), kv_int(kv, "out"), pad, dw)
                            : conv2d_transpose(kv_int(kv, "in"), kv_int(kv, "out"), pad, dw);
  }
  if (name == "dense") {
    auto kv = parse_kv(ss);
    return dense(kv_int(kv, "in"), kv_int(kv, "out"));
  }
  if (name == "batchnorm") {
    auto kv = parse_kv(ss);
    return batchnorm(kv_int(kv, "ch"));
  }
  if (name == "relu") return relu();
  if (name == "leaky_relu") {
    auto kv = parse_kv(ss);
    return leaky_relu(kv_double(kv, "slope"));
  }
  if (name == "tanh") return tanh_activation();
  if (name == "sigmoid") return sigmoid();
  if (name == "dropout") {
    auto kv = parse_kv(ss);
    return dropout(kv_double(kv, "rate"));
  }
  if (name == "concat_grouped") {
    auto kv = parse_kv(ss);
    return concat_grouped(kv_int(kv, "ch"));
  }
  if (name == "flatten") return flatten();
  throw DataError("unknown layer kind '" + name + "'");
}

std::string NetworkSpec::canonical() const {
  std::string out;
  for (const auto& layer : layers) {
    out += layer.canonical();
    out += '\n';
  }
  return out;
}

NetworkSpec NetworkSpec::parse(const std::string& text) {
  NetworkSpec spec;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    spec.layers.push_back(LayerSpec::parse(line));
  }
  return spec;
}

namespace {

[[noreturn]] void shape_error(std::size_t index, const LayerSpec& layer,
                              const std::vector<std::size_t>& got, const std::string& want) {
  throw ConfigError("layer " + std::to_string(index) + " (" + layer_kind_name(layer.kind) +
                    "): input shape " + shape_string(got) + " incompatible, expected " + want);
}

}  // namespace

std::vector<std::vector<std::size_t>> infer_shapes(const NetworkSpec& spec,
                                                   const std::vector<std::size_t>& input) {
  std::vector<std::vector<std::size_t>> shapes;
  std::vector<std::size_t> cur = input;
  for (std::size_t idx = 0; idx < spec.layers.size(); ++idx) {
    const LayerSpec& layer = spec.layers[idx];
    switch (layer.kind) {
      case LayerKind::Conv2d:
      case LayerKind::Conv2dTranspose: {
        if (cur.size() != 4 || cur[3] != static_cast<std::size_t>(layer.in_channels)) {
          shape_error(idx, layer, cur,
                      "[B,H,W," + std::to_string(layer.in_channels) + "]");
        }
        const bool shrink = (layer.kind == LayerKind::Conv2d);
        std::size_t h = cur[1], w = cur[2];
        if (layer.padding == Padding::Valid) {
          if (shrink) {
            if (h < 3 || w < 3) shape_error(idx, layer, cur, "spatial dims >= 3 for valid conv");
            h -= 2;
            w -= 2;
          } else {
            h += 2;
            w += 2;
          }
        }
        std::size_t out_ch = layer.depthwise
                                 ? static_cast<std::size_t>(layer.in_channels) *
                                       static_cast<std::size_t>(layer.out_channels)
                                 : static_cast<std::size_t>(layer.out_channels);
        cur = {cur[0], h, w, out_ch};
        break;
      }
      case LayerKind::Dense:
        if (cur.size() != 2 || cur[1] != static_cast<std::size_t>(layer.in_channels)) {
          shape_error(idx, layer, cur, "[B," + std::to_string(layer.in_channels) + "]");
        }
        cur = {cur[0], static_cast<std::size_t>(layer.out_channels)};
        break;
      case LayerKind::BatchNorm:
      case LayerKind::ConcatGrouped:
        if (cur.empty() || cur.back() != static_cast<std::size_t>(layer.channels)) {
          shape_error(idx, layer, cur, "trailing dim " + std::to_string(layer.channels));
        }
        break;
      case LayerKind::Flatten: {
        if (cur.size() < 2) shape_error(idx, layer, cur, "rank >= 2");
        std::size_t flat = 1;
        for (std::size_t i = 1; i < cur.size(); ++i) flat *= cur[i];
        cur = {cur[0], flat};
        break;
      }
      default:
        break;  // elementwise: shape preserved
    }
    shapes.push_back(cur);
  }
  return shapes;
}

}  // namespace lmpgan::nn

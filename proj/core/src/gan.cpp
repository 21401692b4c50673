#include "lmpgan/gan.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

#include "lmpgan/checkpoint.hpp"
#include "lmpgan/errors.hpp"
#include "lmpgan/losses.hpp"
#include "lmpgan/timeutil.hpp"

namespace lmpgan {

void GanConfig::validate() const {
  if (n < 1) throw ConfigError("history length n must be >= 1");
  if (feature_channels < 1) throw ConfigError("feature_channels must be >= 1");
  if (extra_channels < 0 || extra_channels > 2) {
    throw ConfigError("extra_channels must be 0 (none), 1 (hour-of-day) or 2 (+day-of-week)");
  }
  if (lambda_adv < 0 || lambda_lp < 0 || lambda_gdl < 0 || lambda_dcl < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
  if (p != 1 && p != 2) throw ConfigError("p must be 1 or 2");
  if (alpha < 1) throw ConfigError("alpha must be a positive integer");
  if (lr_g <= 0 || lr_d <= 0) throw ConfigError("learning rates must be positive");
  if (minibatch < 1) throw ConfigError("minibatch size must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (arch.filters1 < 1 || arch.g3 < 1 || arch.g4 < 1 || arch.g5 < 1 || arch.d3 < 1 ||
      arch.d4 < 1 || arch.d5 < 1) {
    throw ConfigError("architecture widths must be positive");
  }
}

nn::NetworkSpec build_generator_spec(const GanConfig& config) {
  using nn::LayerSpec;
  using nn::Padding;
  const int cin = config.g_input_channels();
  const int grouped = cin * config.arch.filters1;
  nn::NetworkSpec spec;
  spec.layers = {
      LayerSpec::conv2d_transpose(cin, config.arch.filters1, Padding::Same, true),
      LayerSpec::concat_grouped(grouped),
      LayerSpec::batchnorm(grouped),
      LayerSpec::relu(),
      LayerSpec::conv2d_transpose(grouped, config.arch.g3, Padding::Same),
      LayerSpec::batchnorm(config.arch.g3),
      LayerSpec::relu(),
      LayerSpec::conv2d_transpose(config.arch.g3, config.arch.g4, Padding::Same),
      LayerSpec::batchnorm(config.arch.g4),
      LayerSpec::relu(),
      LayerSpec::conv2d_transpose(config.arch.g4, config.arch.g5, Padding::Same),
      LayerSpec::batchnorm(config.arch.g5),
      LayerSpec::relu(),
      LayerSpec::conv2d_transpose(config.arch.g5, 1, Padding::Same),
      LayerSpec::tanh_activation(),
  };
  return spec;
}

nn::NetworkSpec build_discriminator_spec(const GanConfig& config) {
  using nn::LayerSpec;
  using nn::Padding;
  const int cin = config.d_input_channels();
  const int grouped = cin * config.arch.filters1;
  nn::NetworkSpec spec;
  spec.layers = {
      LayerSpec::conv2d(cin, config.arch.filters1, Padding::Valid, true),
      LayerSpec::concat_grouped(grouped),
      LayerSpec::batchnorm(grouped),
      LayerSpec::leaky_relu(0.2),
      LayerSpec::dropout(0.3),
      LayerSpec::flatten(),
      LayerSpec::dense(grouped, config.arch.d3),
      LayerSpec::batchnorm(config.arch.d3),
      LayerSpec::leaky_relu(0.2),
      LayerSpec::dropout(0.3),
      LayerSpec::dense(config.arch.d3, config.arch.d4),
      LayerSpec::batchnorm(config.arch.d4),
      LayerSpec::leaky_relu(0.2),
      LayerSpec::dropout(0.3),
      LayerSpec::dense(config.arch.d4, config.arch.d5),
      LayerSpec::batchnorm(config.arch.d5),
      LayerSpec::leaky_relu(0.2),
      LayerSpec::dropout(0.3),
      LayerSpec::dense(config.arch.d5, 1),
      LayerSpec::sigmoid(),
  };
  return spec;
}

GanModel init_gan(const GanConfig& config) {
  config.validate();
  GanModel model;
  model.config = config;
  model.g_spec = build_generator_spec(config);
  model.d_spec = build_discriminator_spec(config);
  std::uint64_t s = config.seed;
  model.g = nn::init_params(model.g_spec, splitmix64(s));
  model.d = nn::init_params(model.d_spec, splitmix64(s));
  return model;
}

namespace {

double hour_channel(std::int64_t ts) { return hour_of_day_utc(ts) / 23.0 * 2.0 - 1.0; }
double dow_channel(std::int64_t ts) { return day_of_week_utc(ts) / 6.0 * 2.0 - 1.0; }

}  // namespace

nn::Tensor pack_generator_input(const std::vector<const Sample*>& batch,
                                const GanConfig& config) {
  if (batch.empty()) throw ConfigError("empty batch");
  const Sample& first = *batch.front();
  if (static_cast<int>(first.history.size()) != config.n) {
    throw ConfigError("sample has " + std::to_string(first.history.size()) +
                      " history frames, config expects " + std::to_string(config.n));
  }
  const std::size_t M = first.history[0].dim(0);
  const std::size_t N = first.history[0].dim(1);
  const std::size_t F = first.history[0].dim(2);
  if (F != static_cast<std::size_t>(config.feature_channels)) {
    throw ConfigError("sample frames have " + std::to_string(F) +
                      " channels, config expects " + std::to_string(config.feature_channels));
  }
  const std::size_t C = static_cast<std::size_t>(config.g_input_channels());
  nn::Tensor x({batch.size(), M, N, C});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sample& s = *batch[b];
    for (std::size_t k = 0; k < s.history.size(); ++k) {
      const nn::Tensor& frame = s.history[k];
      for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
          for (std::size_t c = 0; c < F; ++c) {
            x.at4(b, i, j, k * F + c) = frame.at3(i, j, c);
          }
        }
      }
    }
    if (config.extra_channels >= 1) {
      const double hv = hour_channel(s.target_timestamp);
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j) x.at4(b, i, j, C - config.extra_channels) = hv;
    }
    if (config.extra_channels >= 2) {
      const double dv = dow_channel(s.target_timestamp);
      for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < N; ++j) x.at4(b, i, j, C - 1) = dv;
    }
  }
  return x;
}

nn::Tensor pack_discriminator_input(const std::vector<const Sample*>& batch,
                                    const nn::Tensor& candidates) {
  if (batch.empty()) throw ConfigError("empty batch");
  const Sample& first = *batch.front();
  const std::size_t n = first.history.size();
  const std::size_t M = first.history[0].dim(0);
  const std::size_t N = first.history[0].dim(1);
  nn::Tensor x({batch.size(), M, N, n + 1});
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Sample& s = *batch[b];
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < M; ++i) {
        for (std::size_t j = 0; j < N; ++j) {
          x.at4(b, i, j, k) = s.history[k].at3(i, j, 0);
        }
      }
    }
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < N; ++j) {
        x.at4(b, i, j, n) = candidates.at4(b, i, j, 0);
      }
    }
  }
  return x;
}

nn::Tensor predict_next(const GanModel& model, const std::vector<nn::Tensor>& history,
                        std::int64_t target_timestamp) {
  Sample s;
  s.history = history;
  s.target_timestamp = target_timestamp;
  std::vector<const Sample*> batch{&s};
  nn::Tensor x = pack_generator_input(batch, model.config);
  nn::Tensor y = nn::forward(model.g_spec, model.g, x, nn::Mode::Infer, nullptr);
  return y.reshaped({y.dim(1), y.dim(2), y.dim(3)});
}

MarketVideo predict_series(const GanModel& model, const MarketVideo& normalized,
                           std::int64_t start_ts, std::int64_t end_ts) {
  if (end_ts < start_ts) throw ConfigError("prediction span is empty");
  const int n = model.config.n;
  if (normalized.frame_index_at(start_ts - n * kHourSeconds) < 0 ||
      normalized.frame_index_at(end_ts) < 0) {
    throw DataError("insufficient history: video must cover " +
                    format_iso8601_utc(start_ts - n * kHourSeconds) + " through " +
                    format_iso8601_utc(end_ts));
  }
  MarketVideo out;
  out.layout = normalized.layout;
  out.features = {"RTLMP"};
  for (std::int64_t ts = start_ts; ts <= end_ts; ts += kHourSeconds) {
    std::vector<nn::Tensor> history;
    history.reserve(n);
    for (int k = n; k >= 1; --k) {
      int idx = normalized.frame_index_at(ts - k * kHourSeconds);
      history.push_back(normalized.frames[static_cast<std::size_t>(idx)].values);
    }
    MarketFrame frame;
    frame.timestamp = ts;
    frame.values = predict_next(model, history, ts);
    out.frames.push_back(std::move(frame));
  }
  return out;
}

double validation_l2(const GanModel& model, const std::vector<Sample>& samples) {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  const std::size_t chunk = 32;
  for (std::size_t begin = 0; begin < samples.size(); begin += chunk) {
    const std::size_t count = std::min(chunk, samples.size() - begin);
    std::vector<const Sample*> batch(count);
    for (std::size_t i = 0; i < count; ++i) batch[i] = &samples[begin + i];
    nn::Tensor x = pack_generator_input(batch, model.config);
    nn::Tensor yhat = nn::forward(model.g_spec, model.g, x, nn::Mode::Infer, nullptr);
    for (std::size_t b = 0; b < count; ++b) {
      const Sample& s = *batch[b];
      double acc = 0.0;
      for (std::size_t i = 0; i < yhat.dim(1); ++i) {
        for (std::size_t j = 0; j < yhat.dim(2); ++j) {
          const double d = yhat.at4(b, i, j, 0) - s.target.at3(i, j, 0);
          acc += d * d;
        }
      }
      total += acc;
    }
  }
  return total / static_cast<double>(samples.size());
}

namespace {

std::string config_header(const GanConfig& c) {
  char buf[1024];
  std::snprintf(
      buf, sizeof(buf),
      "n=%d\nfeature_channels=%d\nextra_channels=%d\n"
      "lambda_adv=%.17g\nlambda_lp=%.17g\nlambda_gdl=%.17g\nlambda_dcl=%.17g\n"
      "p=%d\nalpha=%d\nlr_g=%.17g\nlr_d=%.17g\nminibatch=%d\n"
      "max_iterations=%" PRIu64 "\nseed=%" PRIu64 "\neval_every=%" PRIu64 "\n"
      "filters1=%d\ng3=%d\ng4=%d\ng5=%d\nd3=%d\nd4=%d\nd5=%d\n"
      "early_stop_rel=%.17g\nearly_stop_window=%" PRIu64 "\ndivergence_limit=%.17g\n",
      c.n, c.feature_channels, c.extra_channels, c.lambda_adv, c.lambda_lp, c.lambda_gdl,
      c.lambda_dcl, c.p, c.alpha, c.lr_g, c.lr_d, c.minibatch, c.max_iterations, c.seed,
      c.eval_every, c.arch.filters1, c.arch.g3, c.arch.g4, c.arch.g5, c.arch.d3, c.arch.d4,
      c.arch.d5, c.early_stop_rel, c.early_stop_window, c.divergence_limit);
  return buf;
}

std::map<std::string, std::string> parse_kv_lines(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::string kv_get(const std::map<std::string, std::string>& kv, const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError("checkpoint header missing field '" + key + "'");
  return it->second;
}

}  // namespace

void save_gan_checkpoint(const std::string& path, const TrainerState& state) {
  std::string header = "format=gan-trainer-v1\n";
  header += config_header(state.model.config);
  char buf[256];
  const auto rs = state.net_rng.state();
  std::snprintf(buf, sizeof(buf),
                "iteration=%" PRIu64 "\nepoch=%" PRIu64 "\ncursor=%" PRIu64
                "\nrng=%016" PRIx64 " %016" PRIx64 " %016" PRIx64 " %016" PRIx64 "\n",
                state.iteration, state.epoch, state.cursor, rs[0], rs[1], rs[2], rs[3]);
  header += buf;
  header += "generator_spec={\n" + state.model.g_spec.canonical() + "}\n";
  header += "discriminator_spec={\n" + state.model.d_spec.canonical() + "}\n";

  std::vector<const nn::Tensor*> tensors = nn::state_tensors(state.model.g);
  for (const nn::Tensor* t : nn::state_tensors(state.model.d)) tensors.push_back(t);
  nn::write_checkpoint(path, header, tensors);
}

TrainerState load_gan_checkpoint(const std::string& path) {
  nn::CheckpointData data = nn::read_checkpoint(path);
  auto kv = parse_kv_lines(data.header);
  if (kv_get(kv, "format") != "gan-trainer-v1") {
    throw DataError("checkpoint '" + path + "' has an unsupported format tag");
  }

  GanConfig c;
  c.n = std::stoi(kv_get(kv, "n"));
  c.feature_channels = std::stoi(kv_get(kv, "feature_channels"));
  c.extra_channels = std::stoi(kv_get(kv, "extra_channels"));
  c.lambda_adv = std::stod(kv_get(kv, "lambda_adv"));
  c.lambda_lp = std::stod(kv_get(kv, "lambda_lp"));
  c.lambda_gdl = std::stod(kv_get(kv, "lambda_gdl"));
  c.lambda_dcl = std::stod(kv_get(kv, "lambda_dcl"));
  c.p = std::stoi(kv_get(kv, "p"));
  c.alpha = std::stoi(kv_get(kv, "alpha"));
  c.lr_g = std::stod(kv_get(kv, "lr_g"));
  c.lr_d = std::stod(kv_get(kv, "lr_d"));
  c.minibatch = std::stoi(kv_get(kv, "minibatch"));
  c.max_iterations = std::stoull(kv_get(kv, "max_iterations"));
  c.seed = std::stoull(kv_get(kv, "seed"));
  c.eval_every = std::stoull(kv_get(kv, "eval_every"));
  c.arch.filters1 = std::stoi(kv_get(kv, "filters1"));
  c.arch.g3 = std::stoi(kv_get(kv, "g3"));
  c.arch.g4 = std::stoi(kv_get(kv, "g4"));
  c.arch.g5 = std::stoi(kv_get(kv, "g5"));
  c.arch.d3 = std::stoi(kv_get(kv, "d3"));
  c.arch.d4 = std::stoi(kv_get(kv, "d4"));
  c.arch.d5 = std::stoi(kv_get(kv, "d5"));
  c.early_stop_rel = std::stod(kv_get(kv, "early_stop_rel"));
  c.early_stop_window = std::stoull(kv_get(kv, "early_stop_window"));
  c.divergence_limit = std::stod(kv_get(kv, "divergence_limit"));

  TrainerState state;
  state.model = init_gan(c);
  state.iteration = std::stoull(kv_get(kv, "iteration"));
  state.epoch = std::stoull(kv_get(kv, "epoch"));
  state.cursor = std::stoull(kv_get(kv, "cursor"));
  {
    std::istringstream ss(kv_get(kv, "rng"));
    std::array<std::uint64_t, 4> rs{};
    for (auto& w : rs) {
      std::string hex;
      ss >> hex;
      w = std::stoull(hex, nullptr, 16);
    }
    state.net_rng.set_state(rs);
  }

  // Consistency: header spec text must match the rebuilt specs.
  if (data.header.find("generator_spec={\n" + state.model.g_spec.canonical() + "}") ==
      std::string::npos) {
    throw DataError("checkpoint '" + path + "' generator spec does not match its config");
  }

  std::vector<nn::Tensor*> slots = nn::state_tensors(state.model.g);
  for (nn::Tensor* t : nn::state_tensors(state.model.d)) slots.push_back(t);
  if (slots.size() != data.tensors.size()) {
    throw DataError("checkpoint '" + path + "' holds " + std::to_string(data.tensors.size()) +
                    " tensors, expected " + std::to_string(slots.size()));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]->shape() != data.tensors[i].shape()) {
      throw DataError("checkpoint '" + path + "' tensor " + std::to_string(i) +
                      " has shape " + nn::shape_string(data.tensors[i].shape()) + ", expected " +
                      nn::shape_string(slots[i]->shape()));
    }
    *slots[i] = std::move(data.tensors[i]);
  }
  return state;
}

void write_training_log(const std::string& path, const std::vector<TrainRecord>& log) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot open training log '" + path + "' for writing");
  std::fprintf(f, "iteration,loss_D,loss_G,adv,lp,gdl,dcl,val_l2\n");
  for (const auto& r : log) {
    std::fprintf(f, "%" PRIu64 ",%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.iteration,
                 r.loss_d, r.loss_g, r.adv, r.lp, r.gdl, r.dcl, r.val_l2);
  }
  std::fclose(f);
}

}  // namespace lmpgan

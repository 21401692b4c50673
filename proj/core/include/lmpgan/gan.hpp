#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lmpgan/market_data.hpp"
#include "lmpgan/network.hpp"
#include "lmpgan/rng.hpp"

namespace lmpgan {

// Hidden widths. Defaults are the production architecture; tests and the
// desk-scale harness shrink them to stay inside their runtime budgets.
struct GanArch {
  int filters1 = 64;  // shared depthwise filters in the first layer
  int g3 = 1024, g4 = 512, g5 = 64;
  int d3 = 1024, d4 = 512, d5 = 256;
  bool operator==(const GanArch&) const = default;
};

struct GanConfig {
  int n = 4;                // history frames per sample
  int feature_channels = 3; // channels per market frame
  int extra_channels = 0;   // appended calendar channels: 1 = hour-of-day,
                            // 2 = + day-of-week
  double lambda_adv = 0.2;
  double lambda_lp = 1.0;
  double lambda_gdl = 1.0;
  double lambda_dcl = 0.2;
  int p = 2;      // order of the pixel-distance loss
  int alpha = 1;  // gradient-difference exponent
  double lr_g = 0.0005;
  double lr_d = 0.0005;
  int minibatch = 4;
  std::uint64_t max_iterations = 20000;
  std::uint64_t seed = 1;
  std::uint64_t eval_every = 500;
  GanArch arch;
  // Stop when the validation L2 term has not improved by this relative
  // amount over the trailing window.
  double early_stop_rel = 0.001;
  std::uint64_t early_stop_window = 2000;
  double divergence_limit = 1e6;

  int g_input_channels() const { return n * feature_channels + extra_channels; }
  int d_input_channels() const { return n + 1; }
  void validate() const;  // throws ConfigError
};

nn::NetworkSpec build_generator_spec(const GanConfig& config);
nn::NetworkSpec build_discriminator_spec(const GanConfig& config);

struct GanModel {
  GanConfig config;
  nn::NetworkSpec g_spec, d_spec;
  nn::NetworkState g, d;
};

// Deterministic per config.seed.
GanModel init_gan(const GanConfig& config);

// Generator input: the n history frames stacked frame-major (channel
// k*F + c is feature c of history frame k), plus optional calendar
// channels for the target hour. Batched [B, M, N, n*F + extra].
nn::Tensor pack_generator_input(const std::vector<const Sample*>& batch,
                                const GanConfig& config);
// Discriminator input: the n history price channels plus the candidate
// frame, [B, M, N, n+1].
nn::Tensor pack_discriminator_input(const std::vector<const Sample*>& batch,
                                    const nn::Tensor& candidates);

struct TrainRecord {
  std::uint64_t iteration = 0;
  double loss_d = 0, loss_g = 0, adv = 0, lp = 0, gdl = 0, dcl = 0, val_l2 = 0;
};

// Everything needed to continue training deterministically.
struct TrainerState {
  GanModel model;
  std::uint64_t iteration = 0;
  Rng net_rng;                // dropout stream
  std::uint64_t epoch = 0;    // batch sampler position
  std::uint64_t cursor = 0;
};

struct TrainHooks {
  // Invoked at every evaluation point and once after the final iteration.
  std::function<void(const TrainerState&, const std::vector<TrainRecord>&)> on_eval;
};

struct TrainResult {
  GanModel model;
  std::vector<TrainRecord> log;
  std::uint64_t iterations = 0;
  bool early_stopped = false;
};

// Alternating adversarial training: per iteration one summed-gradient SGD
// step on D over a fresh minibatch, then one on G over another fresh
// minibatch. Deterministic given (samples, config). val_samples may be
// empty, in which case the logged val_l2 falls back to a trailing mean of
// the training L2 term.
TrainResult train(const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const GanConfig& config,
                  const TrainHooks& hooks = {});

// Resume from a loaded trainer state; data and config must match the
// original run for the continuation to be meaningful.
TrainResult train_continue(TrainerState state, const std::vector<Sample>& train_samples,
                           const std::vector<Sample>& val_samples,
                           const TrainHooks& hooks = {});

// Next-hour prediction from n history frames (inference mode, pure).
// Output is the [M, N, 1] price frame in normalized units.
nn::Tensor predict_next(const GanModel& model, const std::vector<nn::Tensor>& history,
                        std::int64_t target_timestamp);

// Hour-by-hour prediction over [start, end] using ground-truth history at
// every step. The video must cover [start - n hours, end].
MarketVideo predict_series(const GanModel& model, const MarketVideo& normalized,
                           std::int64_t start_ts, std::int64_t end_ts);

double validation_l2(const GanModel& model, const std::vector<Sample>& samples);

void save_gan_checkpoint(const std::string& path, const TrainerState& state);
TrainerState load_gan_checkpoint(const std::string& path);

// Training log CSV: iteration,loss_D,loss_G,adv,lp,gdl,dcl,val_l2
// (per-sample batch means).
void write_training_log(const std::string& path, const std::vector<TrainRecord>& log);

}  // namespace lmpgan

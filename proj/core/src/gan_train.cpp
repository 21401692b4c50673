#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lmpgan/errors.hpp"
#include "lmpgan/gan.hpp"
#include "lmpgan/losses.hpp"

namespace lmpgan {

namespace {

// Uniform batches without replacement; a fresh shuffle per epoch derived
// from (seed, epoch) so a resumed run regenerates the same order.
class BatchSampler {
 public:
  BatchSampler(std::uint64_t seed, std::size_t count, std::uint64_t epoch, std::uint64_t cursor)
      : seed_(seed), count_(count), epoch_(epoch), cursor_(cursor) {
    rebuild();
  }

  std::vector<std::size_t> next(std::size_t m) {
    if (cursor_ + m > count_) {
      ++epoch_;
      cursor_ = 0;
      rebuild();
    }
    std::vector<std::size_t> batch(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                   order_.begin() + static_cast<std::ptrdiff_t>(cursor_ + m));
    cursor_ += m;
    return batch;
  }

  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t cursor() const { return cursor_; }

 private:
  void rebuild() {
    order_.resize(count_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng rng(seed_ ^ 0x45504f43ULL /* "EPOC" */, epoch_);
    rng.shuffle(order_);
  }

  std::uint64_t seed_;
  std::size_t count_;
  std::uint64_t epoch_;
  std::uint64_t cursor_;
  std::vector<std::size_t> order_;
};

void accumulate(nn::Grads& total, const nn::Grads& part) {
  auto add = [](nn::Tensor& a, const nn::Tensor& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  for (std::size_t l = 0; l < total.layers.size(); ++l) {
    if (!part.layers[l].weights.empty()) add(total.layers[l].weights, part.layers[l].weights);
    if (!part.layers[l].bias.empty()) add(total.layers[l].bias, part.layers[l].bias);
    if (!part.layers[l].gamma.empty()) add(total.layers[l].gamma, part.layers[l].gamma);
    if (!part.layers[l].beta.empty()) add(total.layers[l].beta, part.layers[l].beta);
  }
}

nn::Tensor sample_frame(const nn::Tensor& batch, std::size_t b) {
  nn::Tensor frame({batch.dim(1), batch.dim(2), 1});
  for (std::size_t i = 0; i < batch.dim(1); ++i) {
    for (std::size_t j = 0; j < batch.dim(2); ++j) {
      frame.at3(i, j, 0) = batch.at4(b, i, j, 0);
    }
  }
  return frame;
}

nn::Tensor price_channel(const nn::Tensor& frame) {
  nn::Tensor out({frame.dim(0), frame.dim(1), 1});
  for (std::size_t i = 0; i < frame.dim(0); ++i) {
    for (std::size_t j = 0; j < frame.dim(1); ++j) {
      out.at3(i, j, 0) = frame.at3(i, j, 0);
    }
  }
  return out;
}

void check_finite_loss(double value, const char* what, std::uint64_t iteration, double limit) {
  if (!std::isfinite(value) || std::abs(value) > limit) {
    throw NumericError("training diverged at iteration " + std::to_string(iteration) + ": " +
                       what + " = " + std::to_string(value));
  }
}

TrainResult run_loop(TrainerState state, const std::vector<Sample>& train_samples,
                     const std::vector<Sample>& val_samples, const TrainHooks& hooks,
                     std::vector<TrainRecord> log) {
  const GanConfig& cfg = state.model.config;
  const std::size_t m = static_cast<std::size_t>(cfg.minibatch);
  if (train_samples.size() < m) {
    throw DataError("need at least " + std::to_string(m) + " samples, got " +
                    std::to_string(train_samples.size()));
  }

  BatchSampler sampler(cfg.seed, train_samples.size(), state.epoch, state.cursor);

  double val_metric = 0.0;
  bool have_val_metric = false;
  double best_val = 0.0;
  std::uint64_t best_iter = state.iteration;
  bool early_stopped = false;

  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<const Sample*> batch(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) batch[i] = &train_samples[idx[i]];
    return batch;
  };

  while (state.iteration < cfg.max_iterations) {
    const std::uint64_t iter = state.iteration + 1;

    // --- discriminator step ---
    auto batch_d = gather(sampler.next(m));
    nn::Tensor xg = pack_generator_input(batch_d, cfg);
    nn::Tensor yhat = nn::forward(state.model.g_spec, state.model.g, xg, nn::Mode::Train,
                                  &state.net_rng);
    nn::Tensor targets({m, yhat.dim(1), yhat.dim(2), 1});
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t i = 0; i < yhat.dim(1); ++i) {
        for (std::size_t j = 0; j < yhat.dim(2); ++j) {
          targets.at4(b, i, j, 0) = batch_d[b]->target.at3(i, j, 0);
        }
      }
    }
    nn::Tensor d_real_in = pack_discriminator_input(batch_d, targets);
    nn::Tensor d_fake_in = pack_discriminator_input(batch_d, yhat);

    nn::Cache cache_real, cache_fake;
    nn::Tensor k_real = nn::forward(state.model.d_spec, state.model.d, d_real_in,
                                    nn::Mode::Train, &state.net_rng, &cache_real);
    nn::Tensor k_fake = nn::forward(state.model.d_spec, state.model.d, d_fake_in,
                                    nn::Mode::Train, &state.net_rng, &cache_fake);

    double loss_d_batch = 0.0;
    nn::Tensor dk_real({m, 1}), dk_fake({m, 1});
    for (std::size_t b = 0; b < m; ++b) {
      loss_d_batch += loss_d(k_real.at2(b, 0), k_fake.at2(b, 0));
      dk_real.at2(b, 0) = loss_bce_grad(k_real.at2(b, 0), 1.0);
      dk_fake.at2(b, 0) = loss_bce_grad(k_fake.at2(b, 0), 0.0);
    }
    check_finite_loss(loss_d_batch, "loss_D", iter, cfg.divergence_limit);

    nn::Grads d_grads = nn::backward(state.model.d_spec, state.model.d, cache_real, dk_real);
    accumulate(d_grads, nn::backward(state.model.d_spec, state.model.d, cache_fake, dk_fake));
    nn::sgd_step(state.model.d, d_grads, cfg.lr_d);
    nn::update_running_stats(state.model.d, state.model.d_spec, cache_real);
    nn::update_running_stats(state.model.d, state.model.d_spec, cache_fake);

    // --- generator step (a new batch) ---
    auto batch_g = gather(sampler.next(m));
    nn::Tensor xg2 = pack_generator_input(batch_g, cfg);
    nn::Cache cache_g;
    nn::Tensor yhat2 = nn::forward(state.model.g_spec, state.model.g, xg2, nn::Mode::Train,
                                   &state.net_rng, &cache_g);

    double lp_batch = 0.0, gdl_batch = 0.0, dcl_batch = 0.0;
    nn::Tensor dy = nn::Tensor::zeros_like(yhat2);
    for (std::size_t b = 0; b < m; ++b) {
      const Sample& s = *batch_g[b];
      nn::Tensor yhat_b = sample_frame(yhat2, b);
      nn::Tensor x_last = price_channel(s.history.back());
      lp_batch += loss_lp(yhat_b, s.target, cfg.p);
      gdl_batch += loss_gdl(yhat_b, s.target, cfg.alpha);
      dcl_batch += loss_dcl(yhat_b, s.target, x_last);
      nn::Tensor glp = loss_lp_grad(yhat_b, s.target, cfg.p);
      nn::Tensor ggdl = loss_gdl_grad(yhat_b, s.target, cfg.alpha);
      for (std::size_t i = 0; i < dy.dim(1); ++i) {
        for (std::size_t j = 0; j < dy.dim(2); ++j) {
          dy.at4(b, i, j, 0) = cfg.lambda_lp * glp.at3(i, j, 0) +
                               cfg.lambda_gdl * ggdl.at3(i, j, 0);
          // The direction-change term is piecewise constant: zero gradient.
        }
      }
    }

    nn::Tensor d_fake2_in = pack_discriminator_input(batch_g, yhat2);
    nn::Cache cache_d2;
    nn::Tensor k2 = nn::forward(state.model.d_spec, state.model.d, d_fake2_in, nn::Mode::Train,
                                &state.net_rng, &cache_d2);
    double adv_batch = 0.0;
    nn::Tensor dk2({m, 1});
    for (std::size_t b = 0; b < m; ++b) {
      adv_batch += loss_bce(k2.at2(b, 0), 1.0);
      dk2.at2(b, 0) = cfg.lambda_adv * loss_bce_grad(k2.at2(b, 0), 1.0);
    }
    nn::Grads through_d = nn::backward(state.model.d_spec, state.model.d, cache_d2, dk2);
    const std::size_t cand = through_d.input.dim(3) - 1;
    for (std::size_t b = 0; b < m; ++b) {
      for (std::size_t i = 0; i < dy.dim(1); ++i) {
        for (std::size_t j = 0; j < dy.dim(2); ++j) {
          dy.at4(b, i, j, 0) += through_d.input.at4(b, i, j, cand);
        }
      }
    }

    const double loss_g_batch = cfg.lambda_adv * adv_batch + cfg.lambda_lp * lp_batch +
                                cfg.lambda_gdl * gdl_batch + cfg.lambda_dcl * dcl_batch;
    check_finite_loss(loss_g_batch, "loss_G", iter, cfg.divergence_limit);

    nn::Grads g_grads = nn::backward(state.model.g_spec, state.model.g, cache_g, dy);
    nn::sgd_step(state.model.g, g_grads, cfg.lr_g);
    nn::update_running_stats(state.model.g, state.model.g_spec, cache_g);

    state.iteration = iter;
    state.epoch = sampler.epoch();
    state.cursor = sampler.cursor();

    const double md = static_cast<double>(m);
    TrainRecord rec;
    rec.iteration = iter;
    rec.loss_d = loss_d_batch / md;
    rec.loss_g = loss_g_batch / md;
    rec.adv = adv_batch / md;
    rec.lp = lp_batch / md;
    rec.gdl = gdl_batch / md;
    rec.dcl = dcl_batch / md;
    rec.val_l2 = have_val_metric ? val_metric : rec.lp;
    log.push_back(rec);

    if (iter % cfg.eval_every == 0 || iter == cfg.max_iterations) {
      if (!val_samples.empty()) {
        val_metric = validation_l2(state.model, val_samples);
      } else {
        // Fallback: trailing mean of the training L2 term.
        const std::size_t window = std::min<std::size_t>(log.size(), cfg.eval_every);
        double acc = 0.0;
        for (std::size_t i = log.size() - window; i < log.size(); ++i) acc += log[i].lp;
        val_metric = acc / static_cast<double>(window);
      }
      check_finite_loss(val_metric, "val_l2", iter, cfg.divergence_limit);
      log.back().val_l2 = val_metric;
      if (!have_val_metric || val_metric < best_val * (1.0 - cfg.early_stop_rel)) {
        best_val = val_metric;
        best_iter = iter;
        if (!have_val_metric) have_val_metric = true;
      }
      if (hooks.on_eval) hooks.on_eval(state, log);
      if (iter - best_iter >= cfg.early_stop_window) {
        early_stopped = true;
        break;
      }
    }
  }

  TrainResult result;
  result.model = std::move(state.model);
  result.log = std::move(log);
  result.iterations = state.iteration;
  result.early_stopped = early_stopped;
  return result;
}

}  // namespace

TrainResult train(const std::vector<Sample>& train_samples,
                  const std::vector<Sample>& val_samples, const GanConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  TrainerState state;
  state.model = init_gan(config);
  state.net_rng = Rng(config.seed, /*stream=*/0x44524f50);  // "DROP"
  return run_loop(std::move(state), train_samples, val_samples, hooks, {});
}

TrainResult train_continue(TrainerState state, const std::vector<Sample>& train_samples,
                           const std::vector<Sample>& val_samples, const TrainHooks& hooks) {
  return run_loop(std::move(state), train_samples, val_samples, hooks, {});
}

}  // namespace lmpgan

#include <cmath>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "lmpgan/checkpoint.hpp"
#include "lmpgan/errors.hpp"
#include "lmpgan/gan.hpp"
#include "lmpgan/network.hpp"
#include "test_support.hpp"

using namespace lmpgan;
using nn::LayerSpec;
using nn::NetworkSpec;
using nn::Padding;
using nn::Tensor;

namespace {

// One spec per layer kind, each shaped so every branch gets exercised.
std::vector<std::pair<std::string, NetworkSpec>> layer_kind_specs() {
  std::vector<std::pair<std::string, NetworkSpec>> specs;
  specs.push_back({"conv2d_same", {{LayerSpec::conv2d(3, 4, Padding::Same)}}});
  specs.push_back({"conv2d_valid", {{LayerSpec::conv2d(3, 4, Padding::Valid)}}});
  specs.push_back({"conv2d_depthwise", {{LayerSpec::conv2d(3, 4, Padding::Valid, true)}}});
  specs.push_back({"convt_same", {{LayerSpec::conv2d_transpose(3, 4, Padding::Same)}}});
  specs.push_back({"convt_valid", {{LayerSpec::conv2d_transpose(3, 4, Padding::Valid)}}});
  specs.push_back(
      {"convt_depthwise", {{LayerSpec::conv2d_transpose(3, 4, Padding::Same, true)}}});
  specs.push_back({"dense", {{LayerSpec::flatten(), LayerSpec::dense(27, 5)}}});
  specs.push_back({"batchnorm", {{LayerSpec::batchnorm(3)}}});
  specs.push_back({"relu", {{LayerSpec::conv2d(3, 4, Padding::Same), LayerSpec::relu()}}});
  specs.push_back(
      {"leaky_relu", {{LayerSpec::conv2d(3, 4, Padding::Same), LayerSpec::leaky_relu(0.2)}}});
  specs.push_back({"tanh", {{LayerSpec::tanh_activation()}}});
  specs.push_back({"sigmoid", {{LayerSpec::sigmoid()}}});
  specs.push_back({"dropout", {{LayerSpec::dropout(0.3)}}});
  specs.push_back({"concat_grouped", {{LayerSpec::conv2d(3, 4, Padding::Same, true),
                                       LayerSpec::concat_grouped(12)}}});
  specs.push_back({"flatten", {{LayerSpec::flatten(), LayerSpec::dense(27, 4)}}});
  return specs;
}

}  // namespace

TEST_SUITE("nn_core") {

TEST_CASE("conv2d hand-evaluated example: all-ones 3x3, one filter, no padding") {
  NetworkSpec spec{{LayerSpec::conv2d(1, 1, Padding::Valid)}};
  nn::NetworkState state = nn::init_params(spec, 1);
  state.layers[0].weights.fill(1.0);
  state.layers[0].bias.fill(0.0);
  Tensor x({1, 3, 3, 1});
  x.fill(1.0);
  Tensor y = nn::forward(spec, state, x, nn::Mode::Infer, nullptr);
  REQUIRE(y.shape() == std::vector<std::size_t>{1, 1, 1, 1});
  CHECK(y[0] == doctest::Approx(9.0));
}

TEST_CASE("relu and tanh pointwise semantics") {
  NetworkSpec relu{{LayerSpec::relu()}};
  nn::NetworkState state = nn::init_params(relu, 1);
  Tensor x({1, 3}, {-1.0, 0.0, 2.0});
  Tensor y = nn::forward(relu, state, x, nn::Mode::Infer, nullptr);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 2.0);

  NetworkSpec tanh_spec{{LayerSpec::tanh_activation()}};
  nn::NetworkState tstate = nn::init_params(tanh_spec, 1);
  Tensor big({1, 2}, {50.0, -50.0});
  Tensor ty = nn::forward(tanh_spec, tstate, big, nn::Mode::Infer, nullptr);
  CHECK(ty[0] < 1.0);
  CHECK(ty[0] > 0.999);
  CHECK(ty[1] > -1.0);
}

TEST_CASE("dense backward matches the closed form dW = g x^T") {
  NetworkSpec spec{{LayerSpec::dense(3, 2)}};
  nn::NetworkState state = nn::init_params(spec, 5);
  Tensor x({1, 3}, {0.5, -1.0, 2.0});
  nn::Cache cache;
  nn::forward(spec, state, x, nn::Mode::Train, nullptr, &cache);
  Tensor g({1, 2}, {0.7, -0.3});
  nn::Grads grads = nn::backward(spec, state, cache, g);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(grads.layers[0].weights[o * 3 + i] == doctest::Approx(g[o] * x[i]));
    }
    CHECK(grads.layers[0].bias[o] == doctest::Approx(g[o]));
  }
  // Zero upstream gradient zeroes every parameter gradient.
  Tensor zero({1, 2});
  nn::Grads zg = nn::backward(spec, state, cache, zero);
  for (double v : zg.layers[0].weights) CHECK(v == 0.0);
  for (double v : zg.input) CHECK(v == 0.0);
}

TEST_CASE("finite-difference gradients for every layer kind") {
  for (auto& [name, spec] : layer_kind_specs()) {
    CAPTURE(name);
    double worst = 0.0;
    int done = 0;
    for (std::uint64_t trial = 0; trial < 40 && done < 8; ++trial) {
      Rng setup(1000 + trial * 13);
      nn::NetworkState state = nn::init_params(spec, 2000 + trial);
      testsupport::randomize_params(state, setup);
      Tensor x = testsupport::random_tensor({4, 3, 3, 3}, setup);
      if (!spec.layers.empty() && spec.layers[0].kind == nn::LayerKind::Flatten) {
        // flatten/dense path takes the same 4d input
      }
      Rng forward_rng(3000 + trial);
      if (!testsupport::away_from_kinks(spec, state, x, forward_rng)) continue;
      auto shapes = nn::infer_shapes(spec, x.shape());
      Tensor weighting = testsupport::random_tensor(shapes.back(), setup);
      auto result = testsupport::check_gradients(spec, state, x, weighting, forward_rng);
      worst = std::max(worst, result.max_rel);
      ++done;
    }
    CHECK(done >= 8);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("composed reduced-width generator and discriminator pass gradient checks") {
  GanConfig config;
  config.n = 2;
  config.feature_channels = 2;
  config.arch = GanArch{3, 6, 5, 4, 6, 5, 4};
  config.seed = 77;
  NetworkSpec g_spec = build_generator_spec(config);
  NetworkSpec d_spec = build_discriminator_spec(config);

  for (const NetworkSpec* spec : {&g_spec, &d_spec}) {
    const std::size_t cin = spec == &g_spec
                                ? static_cast<std::size_t>(config.g_input_channels())
                                : static_cast<std::size_t>(config.d_input_channels());
    double worst = 0.0;
    int done = 0;
    for (std::uint64_t trial = 0; trial < 60 && done < 5; ++trial) {
      Rng setup(500 + trial * 7);
      nn::NetworkState state = nn::init_params(*spec, 900 + trial);
      testsupport::randomize_params(state, setup);
      Tensor x = testsupport::random_tensor({4, 3, 3, cin}, setup);
      Rng forward_rng(71 + trial);
      if (!testsupport::away_from_kinks(*spec, state, x, forward_rng)) continue;
      auto shapes = nn::infer_shapes(*spec, x.shape());
      Tensor weighting = testsupport::random_tensor(shapes.back(), setup);
      auto result = testsupport::check_gradients(*spec, state, x, weighting, forward_rng);
      worst = std::max(worst, result.max_rel);
      ++done;
    }
    CHECK(done >= 5);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("conv2d_transpose is the adjoint of conv2d with identical kernels") {
  for (Padding pad : {Padding::Valid, Padding::Same}) {
    NetworkSpec conv{{LayerSpec::conv2d(3, 5, pad)}};
    nn::NetworkState cstate = nn::init_params(conv, 31);
    Rng rng(32);
    for (auto& v : cstate.layers[0].weights) v = rng.uniform(-1.0, 1.0);
    cstate.layers[0].bias.fill(0.0);

    // Transpose layer sharing the same weight tensor: maps 5 -> 3.
    NetworkSpec convt{{LayerSpec::conv2d_transpose(5, 3, pad)}};
    nn::NetworkState tstate = nn::init_params(convt, 33);
    tstate.layers[0].weights = cstate.layers[0].weights;
    tstate.layers[0].bias.fill(0.0);

    Tensor x = testsupport::random_tensor({2, 4, 4, 3}, rng);
    Tensor cx = nn::forward(conv, cstate, x, nn::Mode::Infer, nullptr);
    Tensor y = testsupport::random_tensor(cx.shape(), rng);
    Tensor ty = nn::forward(convt, tstate, y, nn::Mode::Infer, nullptr);
    REQUIRE(ty.shape() == x.shape());
    CHECK(nn::dot(cx, y) == doctest::Approx(nn::dot(x, ty)).epsilon(1e-9));
  }
}

TEST_CASE("batchnorm train-mode output is standardized before gamma/beta") {
  NetworkSpec spec{{LayerSpec::batchnorm(4)}};
  nn::NetworkState state = nn::init_params(spec, 3);  // gamma=1, beta=0
  Rng rng(9);
  Tensor x = testsupport::random_tensor({8, 3, 3, 4}, rng, -2.0, 2.0);
  nn::Cache cache;
  Tensor y = nn::forward(spec, state, x, nn::Mode::Train, nullptr, &cache);
  const std::size_t m = x.size() / 4;
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = c; i < y.size(); i += 4) mean += y[i];
    mean /= static_cast<double>(m);
    for (std::size_t i = c; i < y.size(); i += 4) var += (y[i] - mean) * (y[i] - mean);
    var /= static_cast<double>(m);
    CHECK(std::abs(mean) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("batchnorm inference uses running averages and the cache guards") {
  NetworkSpec spec{{LayerSpec::batchnorm(2)}};
  nn::NetworkState state = nn::init_params(spec, 3);
  Rng rng(10);
  Tensor x = testsupport::random_tensor({16, 2}, rng, 5.0, 9.0);
  nn::Cache cache;
  nn::forward(spec, state, x, nn::Mode::Train, nullptr, &cache);
  // Before any running update the stats are (0, 1): infer output = input.
  Tensor y0 = nn::forward(spec, state, x, nn::Mode::Infer, nullptr);
  CHECK(y0[0] == doctest::Approx(x[0]).epsilon(1e-6));

  for (int i = 0; i < 2000; ++i) nn::update_running_stats(state, spec, cache, 0.99);
  Tensor y1 = nn::forward(spec, state, x, nn::Mode::Infer, nullptr);
  // Running stats converge to the batch stats, so infer ~ standardized.
  double mean = 0.0;
  for (std::size_t i = 0; i < y1.size(); i += 2) mean += y1[i];
  mean /= static_cast<double>(y1.size() / 2);
  CHECK(std::abs(mean) < 1e-3);

  nn::Cache infer_cache;
  nn::forward(spec, state, x, nn::Mode::Infer, nullptr, &infer_cache);
  Tensor g({16, 2});
  CHECK_THROWS_AS(nn::backward(spec, state, infer_cache, g), ConfigError);
}

TEST_CASE("forward(infer) is pure: bit-identical outputs, no state change") {
  GanConfig config;
  config.n = 2;
  config.feature_channels = 2;
  config.arch = GanArch{2, 4, 4, 3, 4, 4, 3};
  GanModel model = init_gan(config);
  Rng rng(77);
  Tensor x = testsupport::random_tensor({2, 3, 3, 4}, rng);
  Tensor y1 = nn::forward(model.g_spec, model.g, x, nn::Mode::Infer, nullptr);
  Tensor y2 = nn::forward(model.g_spec, model.g, x, nn::Mode::Infer, nullptr);
  for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);
}

TEST_CASE("sgd_step worked examples") {
  NetworkSpec spec{{LayerSpec::dense(1, 1)}};
  nn::NetworkState state = nn::init_params(spec, 1);
  state.layers[0].weights[0] = 1.0;
  nn::Grads grads;
  grads.layers.resize(1);
  grads.layers[0].weights = Tensor({1, 1}, {2.0});
  grads.layers[0].bias = Tensor({1}, {0.0});

  nn::NetworkState copy = state;
  nn::sgd_step(copy, grads, 0.0);
  CHECK(copy.layers[0].weights[0] == 1.0);  // lr = 0 leaves state unchanged

  nn::sgd_step(state, grads, 0.1);
  CHECK(state.layers[0].weights[0] == doctest::Approx(0.8));

  grads.layers[0].weights[0] = std::nan("");
  CHECK_THROWS_AS(nn::sgd_step(state, grads, 0.1), NumericError);
}

TEST_CASE("sgd on a quadratic bowl converges") {
  // f(w) = w^2, gradient 2w, lr 0.1 -> w shrinks by 0.8 per step.
  NetworkSpec spec{{LayerSpec::dense(1, 1)}};
  nn::NetworkState state = nn::init_params(spec, 1);
  state.layers[0].weights[0] = 1.0;
  state.layers[0].bias[0] = 0.0;
  for (int i = 0; i < 100; ++i) {
    nn::Grads grads;
    grads.layers.resize(1);
    grads.layers[0].weights = Tensor({1, 1}, {2.0 * state.layers[0].weights[0]});
    nn::sgd_step(state, grads, 0.1);
  }
  CHECK(std::abs(state.layers[0].weights[0]) < 1e-8);
}

TEST_CASE("init_params: deterministic, zero biases, near-zero weight mean") {
  NetworkSpec spec{{LayerSpec::dense(100, 100), LayerSpec::batchnorm(100)}};
  nn::NetworkState a = nn::init_params(spec, 12345);
  nn::NetworkState b = nn::init_params(spec, 12345);
  for (std::size_t i = 0; i < a.layers[0].weights.size(); ++i) {
    CHECK(a.layers[0].weights[i] == b.layers[0].weights[i]);
  }
  for (double v : a.layers[0].bias) CHECK(v == 0.0);
  for (double v : a.layers[1].gamma) CHECK(v == 1.0);
  for (double v : a.layers[1].beta) CHECK(v == 0.0);

  double mean = 0.0;
  for (double v : a.layers[0].weights) {
    CHECK(std::abs(v) <= 0.04);  // truncation at 2 sigma
    mean += v;
  }
  mean /= static_cast<double>(a.layers[0].weights.size());
  CHECK(std::abs(mean) < 0.002);

  nn::NetworkState c = nn::init_params(spec, 54321);
  CHECK(a.layers[0].weights[0] != c.layers[0].weights[0]);
}

TEST_CASE("forward reports shape mismatches with the layer index") {
  NetworkSpec spec{{LayerSpec::conv2d(3, 4, Padding::Same), LayerSpec::batchnorm(5)}};
  nn::NetworkState state = nn::init_params(spec, 1);
  Tensor x({1, 3, 3, 3});
  CHECK_THROWS_WITH_AS(nn::forward(spec, state, x, nn::Mode::Infer, nullptr),
                       doctest::Contains("layer 1"), ConfigError);
}

TEST_CASE("network spec canonical text round-trips") {
  GanConfig config;
  NetworkSpec g = build_generator_spec(config);
  NetworkSpec d = build_discriminator_spec(config);
  CHECK(NetworkSpec::parse(g.canonical()).canonical() == g.canonical());
  CHECK(NetworkSpec::parse(d.canonical()).canonical() == d.canonical());
}

TEST_CASE("parameter counts of the production architectures (frozen)") {
  // 14-channel configuration (4 history frames x 3 features + 2 calendar).
  GanConfig table;
  table.extra_channels = 2;
  CHECK(nn::param_count(build_generator_spec(table)) == 13278849u);
  CHECK(nn::param_count(build_discriminator_spec(table)) == 989953u);

  // Default 12-channel configuration.
  GanConfig plain;
  CHECK(nn::param_count(build_generator_spec(plain)) == 12098945u);
  CHECK(nn::param_count(build_discriminator_spec(plain)) == 989953u);
}

TEST_CASE("checkpoints round-trip and reject foreign files") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "lmpgan_ckpt_test.bin").string();
  GanConfig config;
  config.n = 2;
  config.feature_channels = 2;
  config.arch = GanArch{2, 4, 4, 3, 4, 4, 3};
  config.seed = 5;
  TrainerState state;
  state.model = init_gan(config);
  state.iteration = 123;
  state.net_rng = Rng(9, 9);
  state.net_rng.next_u64();
  state.epoch = 3;
  state.cursor = 8;
  save_gan_checkpoint(path, state);

  TrainerState loaded = load_gan_checkpoint(path);
  CHECK(loaded.iteration == 123);
  CHECK(loaded.epoch == 3);
  CHECK(loaded.cursor == 8);
  CHECK(loaded.net_rng.state() == state.net_rng.state());
  auto a = nn::state_tensors(state.model.g);
  auto b = nn::state_tensors(loaded.model.g);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i]->size(); ++j) CHECK((*a[i])[j] == (*b[i])[j]);
  }

  std::ofstream bad(path, std::ios::binary);
  bad << "NOTMAGIC and then some";
  bad.close();
  CHECK_THROWS_AS(load_gan_checkpoint(path), DataError);
  std::filesystem::remove(path);
}

}  // TEST_SUITE

#include <cmath>

#include <doctest.h>

#include "lmpgan/errors.hpp"
#include "lmpgan/losses.hpp"
#include "lmpgan/rng.hpp"
#include "test_support.hpp"

using namespace lmpgan;
using nn::Tensor;

namespace {

Tensor frame2x2(double a, double b, double c, double d) {
  return Tensor({2, 2}, {a, b, c, d});
}

// Central-difference gradient of a frame loss w.r.t. yhat.
template <typename Loss>
double fd_max_rel(const Tensor& grad, Tensor yhat, Loss loss, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < yhat.size(); ++i) {
    const double orig = yhat[i];
    yhat[i] = orig + h;
    const double up = loss(yhat);
    yhat[i] = orig - h;
    const double down = loss(yhat);
    yhat[i] = orig;
    worst = std::max(worst, testsupport::rel_err(grad[i], (up - down) / (2.0 * h)));
  }
  return worst;
}

}  // namespace

TEST_SUITE("gan_losses") {

TEST_CASE("binary cross-entropy worked values") {
  CHECK(loss_bce(1.0 - 1e-7, 1.0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(loss_bce(0.5, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_bce(0.5, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss_bce(1e-7, 1.0) == doctest::Approx(-std::log(1e-7)));
  CHECK(loss_bce(1e-7, 1.0) == doctest::Approx(16.118).epsilon(1e-3));
  // Clamping keeps extreme inputs finite.
  CHECK(std::isfinite(loss_bce(0.0, 1.0)));
  CHECK(std::isfinite(loss_bce(1.0, 0.0)));
}

TEST_CASE("discriminator loss worked values") {
  CHECK(loss_d(1.0 - 1e-7, 1e-7) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(loss_d(0.5, 0.5) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(loss_d(1e-7, 1.0 - 1e-7) == doctest::Approx(2.0 * 16.118).epsilon(1e-3));
}

TEST_CASE("lp distance worked values") {
  Tensor y({1, 2}, {1.0, 0.0});
  CHECK(loss_lp(y, y, 2) == 0.0);
  CHECK(loss_lp(Tensor({1, 2}, {0.0, 0.0}), y, 2) == doctest::Approx(1.0));
  CHECK(loss_lp(Tensor({1, 2}, {0.0, 0.5}), y, 1) == doctest::Approx(1.5));
  CHECK_THROWS_AS(loss_lp(Tensor({2, 1}), y, 2), ConfigError);
}

TEST_CASE("gradient-difference loss worked values") {
  // Two columns, constant rows: two horizontal gradient mismatches of 1.
  Tensor y = frame2x2(0, 1, 0, 1);
  Tensor yhat = frame2x2(0, 0, 0, 0);
  CHECK(loss_gdl(yhat, y, 1) == doctest::Approx(2.0));
  CHECK(loss_gdl(y, y, 1) == 0.0);

  // Constant shift leaves all gradients unchanged.
  Tensor shifted = frame2x2(0.3, 1.3, 0.3, 1.3);
  CHECK(loss_gdl(shifted, y, 1) == doctest::Approx(0.0));

  // alpha = 2 squares each mismatch.
  Tensor half = frame2x2(0, 0.5, 0, 0.5);
  CHECK(loss_gdl(half, y, 2) == doctest::Approx(2 * 0.25));
}

TEST_CASE("direction-changing loss worked values") {
  Tensor x_last({1, 1}, {0.2});
  auto dcl = [&](double yhat, double y) {
    return loss_dcl(Tensor({1, 1}, {yhat}), Tensor({1, 1}, {y}), x_last);
  };
  CHECK(dcl(0.3, 0.5) == 0.0);  // both increase
  CHECK(dcl(0.1, 0.5) == 2.0);  // opposite directions
  CHECK(dcl(0.3, 0.2) == 1.0);  // flat truth vs. increase
  // Per-pixel contributions stay in {0, 1, 2} and the total is bounded.
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    Tensor yh({3, 3}), yy({3, 3}), xl({3, 3});
    for (std::size_t i = 0; i < 9; ++i) {
      yh[i] = rng.uniform(-1, 1);
      yy[i] = rng.uniform(-1, 1);
      xl[i] = rng.uniform(-1, 1);
    }
    const double total = loss_dcl(yh, yy, xl);
    CHECK(total >= 0.0);
    CHECK(total <= 2.0 * 9.0);
    CHECK(total == std::floor(total));  // integer-valued
  }
}

TEST_CASE("strict sign trichotomy") {
  CHECK(sign_of(-3.2) == -1);
  CHECK(sign_of(0.0) == 0);
  CHECK(sign_of(1e-300) == 1);
}

TEST_CASE("weighted generator loss worked example") {
  // Components (adv, lp, gdl, dcl) = (ln 2, 0.5, 0.3, 1) under default
  // weights 0.2/1/1/0.2.
  const double adv = std::log(2.0);
  const double total = 0.2 * adv + 1.0 * 0.5 + 1.0 * 0.3 + 0.2 * 1.0;
  CHECK(total == doctest::Approx(1.1386).epsilon(1e-4));
  // All lambdas zero gives zero.
  CHECK(0.0 * adv + 0.0 * 0.5 + 0.0 * 0.3 + 0.0 * 1.0 == 0.0);
}

TEST_CASE("lp and gdl gradients match finite differences; dcl gradient is zero a.e.") {
  Rng rng(21);
  Tensor y({3, 3}), yhat({3, 3}), x_last({3, 3});
  for (std::size_t i = 0; i < 9; ++i) {
    y[i] = rng.uniform(-1, 1);
    yhat[i] = rng.uniform(-1, 1);
    x_last[i] = rng.uniform(-1, 1);
  }

  Tensor glp = loss_lp_grad(yhat, y, 2);
  CHECK(fd_max_rel(glp, yhat, [&](const Tensor& t) { return loss_lp(t, y, 2); }) < 1e-4);

  Tensor ggdl = loss_gdl_grad(yhat, y, 1);
  CHECK(fd_max_rel(ggdl, yhat, [&](const Tensor& t) { return loss_gdl(t, y, 1); }) < 1e-4);

  Tensor ggdl2 = loss_gdl_grad(yhat, y, 2);
  CHECK(fd_max_rel(ggdl2, yhat, [&](const Tensor& t) { return loss_gdl(t, y, 2); }) < 1e-4);

  // dcl is piecewise constant: away from its jumps the finite difference
  // is exactly zero, matching the declared zero gradient.
  for (std::size_t i = 0; i < 9; ++i) {
    const double orig = yhat[i];
    yhat[i] = orig + 1e-5;
    const double up = loss_dcl(yhat, y, x_last);
    yhat[i] = orig - 1e-5;
    const double down = loss_dcl(yhat, y, x_last);
    yhat[i] = orig;
    CHECK(up == down);
  }
}

TEST_CASE("bce gradient matches finite differences inside the clamp") {
  for (double k : {0.2, 0.5, 0.9}) {
    for (double s : {0.0, 1.0}) {
      const double h = 1e-7;
      const double numeric = (loss_bce(k + h, s) - loss_bce(k - h, s)) / (2 * h);
      CHECK(testsupport::rel_err(loss_bce_grad(k, s), numeric) < 1e-5);
    }
  }
  CHECK(loss_bce_grad(1e-9, 1.0) == 0.0);  // clamp region is flat
}

TEST_CASE("generator loss components vanish at a perfect prediction") {
  Rng rng(5);
  Tensor y({3, 3});
  for (auto& v : y) v = rng.uniform(-0.9, 0.9);
  Tensor x_last({3, 3});
  for (auto& v : x_last) v = rng.uniform(-0.9, 0.9);
  CHECK(loss_lp(y, y, 2) == 0.0);
  CHECK(loss_gdl(y, y, 1) == 0.0);
  CHECK(loss_dcl(y, y, x_last) == 0.0);
  CHECK(loss_bce(1.0 - 1e-7, 1.0) < 1e-6);
}

}  // TEST_SUITE

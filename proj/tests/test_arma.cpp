#include <cmath>

#include <doctest.h>

#include "lmpgan/arma.hpp"
#include "lmpgan/errors.hpp"
#include "lmpgan/rng.hpp"

using namespace lmpgan;

namespace {

ArmaModel make_model(int p, int q, double mu, std::vector<double> phi,
                     std::vector<double> theta, double sigma2) {
  ArmaModel m;
  m.p = p;
  m.q = q;
  m.mu = mu;
  m.phi = std::move(phi);
  m.theta = std::move(theta);
  m.sigma2 = sigma2;
  return m;
}

std::vector<double> white_noise(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  return x;
}

}  // namespace

TEST_SUITE("calibration") {

TEST_CASE("white noise fits to a near-zero AR coefficient") {
  auto x = white_noise(10000, 1);
  ArmaModel m = fit_arma(x, 1, 0);
  CHECK(std::abs(m.phi[0]) < 0.05);
  CHECK(m.sigma2 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("simulated AR(1) phi=0.7 is recovered") {
  ArmaModel truth = make_model(1, 0, 0.0, {0.7}, {}, 1.0);
  auto x = simulate_arma(truth, 10000, 7);
  ArmaModel m = fit_arma(x, 1, 0);
  CHECK(m.phi[0] > 0.65);
  CHECK(m.phi[0] < 0.75);
  CHECK(m.causal);
}

TEST_CASE("simulated ARMA(1,1) phi=0.5 theta=0.3 is recovered") {
  ArmaModel truth = make_model(1, 1, 0.0, {0.5}, {0.3}, 1.0);
  auto x = simulate_arma(truth, 10000, 11);
  ArmaModel m = fit_arma(x, 1, 1);
  CHECK(m.phi[0] > 0.4);
  CHECK(m.phi[0] < 0.6);
  CHECK(m.theta[0] > 0.2);
  CHECK(m.theta[0] < 0.4);
  CHECK(m.causal);
  CHECK(m.invertible);
}

TEST_CASE("the fitted mean absorbs a nonzero level") {
  ArmaModel truth = make_model(1, 0, 12.5, {0.6}, {}, 1.0);
  auto x = simulate_arma(truth, 8000, 3);
  ArmaModel m = fit_arma(x, 1, 0);
  CHECK(m.mu == doctest::Approx(12.5).epsilon(0.05));
  CHECK(m.phi[0] == doctest::Approx(0.6).epsilon(0.2));
}

TEST_CASE("insufficient data is rejected with the documented bound") {
  auto x = white_noise(50, 2);
  CHECK_THROWS_AS(fit_arma(x, 1, 1), DataError);  // needs 60
  CHECK_NOTHROW(fit_arma(x, 1, 0));               // needs 40
}

TEST_CASE("order selection: white noise chooses (0,0)") {
  auto x = white_noise(3000, 5);
  auto [p, q] = select_order(x, 3, 3);
  CHECK(p == 0);
  CHECK(q == 0);
}

TEST_CASE("order selection: strong AR(1) keeps an AR term") {
  ArmaModel truth = make_model(1, 0, 0.0, {0.8}, {}, 1.0);
  auto x = simulate_arma(truth, 4000, 17);
  auto [p, q] = select_order(x, 3, 3);
  CHECK(p >= 1);
}

TEST_CASE("order selection tie-break prefers fewer parameters") {
  // A constant series makes every candidate equally (non-)informative.
  std::vector<double> x(200, 4.2);
  auto [p, q] = select_order(x, 2, 2);
  CHECK(p == 0);
  CHECK(q == 0);
}

TEST_CASE("forecast worked examples") {
  // Degenerate model forecasts its mean.
  ArmaModel mean_only = make_model(0, 0, 3.25, {}, {}, 1.0);
  CHECK(forecast_delta(mean_only, {}, {}) == doctest::Approx(3.25));

  // AR(1) phi=0.5, mu=0, last residual 2 -> 1.
  ArmaModel ar1 = make_model(1, 0, 0.0, {0.5}, {}, 1.0);
  CHECK(forecast_delta(ar1, {2.0}, {}) == doctest::Approx(1.0));

  // MA(1) theta=0.4, mu=0, last innovation 1 -> 0.4.
  ArmaModel ma1 = make_model(0, 1, 0.0, {}, {0.4}, 1.0);
  CHECK(forecast_delta(ma1, {}, {1.0}) == doctest::Approx(0.4));

  CHECK_THROWS_AS(forecast_delta(ar1, {}, {}), DataError);
}

TEST_CASE("centered AR forecasting is consistent with a shifted series") {
  // AR(1) around mean 10: residual 12 implies forecast 10 + 0.5 * 2.
  ArmaModel ar1 = make_model(1, 0, 10.0, {0.5}, {}, 1.0);
  CHECK(forecast_delta(ar1, {12.0}, {}) == doctest::Approx(11.0));
}

TEST_CASE("innovation filter inverts the simulation under the true model") {
  ArmaModel truth = make_model(1, 1, 0.0, {0.5}, {0.3}, 1.0);
  auto x = simulate_arma(truth, 5000, 23);
  auto e = filter_innovations(truth, x);
  // Innovations should be near white: tiny lag-1 autocorrelation.
  double num = 0, den = 0, mean = 0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(e.size());
  for (std::size_t t = 1; t < e.size(); ++t) {
    num += (e[t] - mean) * (e[t - 1] - mean);
  }
  for (double v : e) den += (v - mean) * (v - mean);
  CHECK(std::abs(num / den) < 0.05);
}

TEST_CASE("non-causal fits are flagged, not rejected") {
  // Data from an explosive AR is still fit by least squares; the flag
  // and warning report the violation.
  std::vector<double> x;
  double v = 0.1;
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    v = 1.05 * v + 0.01 * rng.normal();
    x.push_back(v);
  }
  std::vector<std::string> warnings;
  ArmaModel m = fit_arma(x, 1, 0, &warnings);
  CHECK(m.phi[0] > 1.0);
  CHECK_FALSE(m.causal);
  CHECK(!warnings.empty());
}

TEST_CASE("calibration of a zero-residual history is the identity") {
  std::vector<double> y(300);
  Rng rng(41);
  for (auto& v : y) v = 40.0 + rng.uniform(-5.0, 5.0);
  CalibrationConfig config;
  CalibratedSeries out = calibrate_series(y, y, config);
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(out.calibrated[i] - y[i]) < 1e-9);
    CHECK(std::abs(out.delta_hat[i]) < 1e-9);
  }
}

TEST_CASE("constant bias is absorbed after warm-up") {
  std::vector<double> truth(400), pred(400);
  Rng rng(43);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = 45.0 + rng.uniform(-3.0, 3.0);
    pred[i] = truth[i] - 5.0;
  }
  CalibrationConfig config;
  CalibratedSeries out = calibrate_series(pred, truth, config);
  for (std::size_t i = 200; i < truth.size(); ++i) {
    CHECK(std::abs(out.calibrated[i] - truth[i]) < 0.5 + 3.0);  // mean +/- noise
    CHECK(out.delta_hat[i] == doctest::Approx(5.0).epsilon(0.15));
  }
}

TEST_CASE("calibration is causal: future truths do not affect earlier output") {
  std::vector<double> truth(300), pred(300);
  Rng rng(47);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = 50.0 + rng.normal();
    pred[i] = truth[i] - rng.uniform(0.0, 2.0);
  }
  CalibrationConfig config;
  CalibratedSeries base = calibrate_series(pred, truth, config);

  std::vector<double> tampered = truth;
  for (std::size_t i = 250; i < tampered.size(); ++i) tampered[i] += 100.0;
  CalibratedSeries perturbed = calibrate_series(pred, tampered, config);
  for (std::size_t i = 0; i <= 250; ++i) {
    CHECK(base.calibrated[i] == perturbed.calibrated[i]);
  }
}

TEST_CASE("calibration improves MAPE on AR(1)-correlated residuals") {
  ArmaModel residual_model = make_model(1, 0, 2.0, {0.8}, {}, 1.0);
  auto residuals = simulate_arma(residual_model, 600, 53);
  std::vector<double> truth(600), pred(600);
  Rng rng(59);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = 50.0 + 8.0 * std::sin(static_cast<double>(i) * 0.26) + rng.normal();
    pred[i] = truth[i] - residuals[i];
  }
  CalibrationConfig config;
  CalibratedSeries out = calibrate_series(pred, truth, config);
  double mape_raw = 0, mape_cal = 0;
  std::size_t count = 0;
  for (std::size_t i = 200; i < truth.size(); ++i) {
    mape_raw += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
    mape_cal += std::abs(truth[i] - out.calibrated[i]) / std::abs(truth[i]);
    ++count;
  }
  CHECK(mape_cal / static_cast<double>(count) < mape_raw / static_cast<double>(count));
}

TEST_CASE("too little history for the warm-up is an error") {
  std::vector<double> y(20, 1.0);
  CalibrationConfig config;
  CHECK_THROWS_AS(calibrate_series(y, y, config), DataError);
}

}  // TEST_SUITE

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lmpgan {

// ARMA(p, q) residual-correction model for one price node. The centered
// form is used throughout: x(t) - mu = sum phi_k (x(t-k) - mu)
//                                    + sum theta_k e(t-k) + e(t).
struct ArmaModel {
  int p = 0;
  int q = 0;
  double mu = 0.0;
  double sigma2 = 0.0;
  std::vector<double> phi;    // size p
  std::vector<double> theta;  // size q
  bool causal = true;      // AR polynomial roots outside the unit circle
  bool invertible = true;  // MA polynomial roots outside the unit circle
};

// Hannan-Rissanen estimation: mu is the sample mean; innovations are
// proxied by a long-AR fit, then phi/theta come from least squares on the
// demeaned series (two refinement rounds re-estimate the innovations from
// the fitted model). Requires series.size() >= 20 * (p + q + 1).
ArmaModel fit_arma(const std::vector<double>& series, int p, int q,
                   std::vector<std::string>* warnings = nullptr);

// Grid search over p <= p_max, q <= q_max minimizing
// BIC = n ln(sigma2) + (p + q + 1) ln(n). Ties prefer smaller p + q, then
// smaller p. Falls back to (1, 1) with a warning if every candidate fails.
std::pair<int, int> select_order(const std::vector<double>& series, int p_max, int q_max,
                                 std::vector<std::string>* warnings = nullptr);

// One-step-ahead forecast given the most recent residuals and innovations
// (most recent last). Needs at least p residuals and q innovations.
double forecast_delta(const ArmaModel& model, const std::vector<double>& recent_residuals,
                      const std::vector<double>& recent_innovations);

// One-step innovations of a series under the model: e(t) = x(t) - x̂(t),
// with pre-sample values treated as zero.
std::vector<double> filter_innovations(const ArmaModel& model,
                                       const std::vector<double>& series);

// Gaussian-driven simulation, deterministic per seed (for oracles).
std::vector<double> simulate_arma(const ArmaModel& model, std::size_t n, std::uint64_t seed);

struct CalibrationConfig {
  int window_hours = 168;  // trailing residual window per refit
  int refit_hours = 24;    // refit cadence
  int p_max = 3;
  int q_max = 3;
  int min_fit_hours = 48;  // no corrections before this much history
};

struct CalibratedSeries {
  std::vector<double> calibrated;  // y_pred + delta_hat
  std::vector<double> delta_hat;   // forecast corrections (0 during warm-up)
};

// Walk-forward calibration of one node's predictions against truths that
// become available one hour at a time. The correction for hour i uses
// only truths with index < i. Both series are hourly aligned.
CalibratedSeries calibrate_series(const std::vector<double>& y_pred,
                                  const std::vector<double>& y_true,
                                  const CalibrationConfig& config);

}  // namespace lmpgan

#include "lmpgan/arma.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "lmpgan/errors.hpp"
#include "lmpgan/rng.hpp"

namespace lmpgan {

namespace {

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v, double mu) {
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

// Solves (X^T X) beta = X^T y with a Cholesky factorization; retries with
// an escalating ridge before giving up.
std::vector<double> least_squares(const std::vector<std::vector<double>>& rows,
                                  const std::vector<double>& y) {
  const std::size_t m = rows.size();
  const std::size_t k = rows.empty() ? 0 : rows[0].size();
  if (m < k || k == 0) throw DataError("insufficient data for regression");
  std::vector<double> ata(k * k, 0.0), aty(k, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      aty[i] += rows[r][i] * y[r];
      for (std::size_t j = i; j < k; ++j) ata[i * k + j] += rows[r][i] * rows[r][j];
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) ata[i * k + j] = ata[j * k + i];
  }
  double trace = 0.0;
  for (std::size_t i = 0; i < k; ++i) trace += ata[i * k + i];

  for (double ridge : {0.0, 1e-10, 1e-7, 1e-4}) {
    std::vector<double> chol(ata);
    if (ridge > 0.0) {
      const double bump = ridge * (trace / static_cast<double>(k) + 1.0);
      for (std::size_t i = 0; i < k; ++i) chol[i * k + i] += bump;
    }
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double sum = chol[i * k + j];
        for (std::size_t t = 0; t < j; ++t) sum -= chol[i * k + t] * chol[j * k + t];
        if (i == j) {
          if (sum <= 0.0) {
            ok = false;
            break;
          }
          chol[i * k + i] = std::sqrt(sum);
        } else {
          chol[i * k + j] = sum / chol[j * k + j];
        }
      }
    }
    if (!ok) continue;
    std::vector<double> z(k), beta(k);
    for (std::size_t i = 0; i < k; ++i) {
      double sum = aty[i];
      for (std::size_t t = 0; t < i; ++t) sum -= chol[i * k + t] * z[t];
      z[i] = sum / chol[i * k + i];
    }
    for (std::size_t ii = k; ii-- > 0;) {
      double sum = z[ii];
      for (std::size_t t = ii + 1; t < k; ++t) sum -= chol[t * k + ii] * beta[t];
      beta[ii] = sum / chol[ii * k + ii];
    }
    return beta;
  }
  throw DataError("singular regression (collinear lags)");
}

// Roots of c[0] + c[1] z + ... + c[d] z^d by Durand-Kerner.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
  int d = static_cast<int>(coeffs.size()) - 1;
  while (d > 0 && std::abs(coeffs[static_cast<std::size_t>(d)]) < 1e-14) --d;
  if (d <= 0) return {};
  std::vector<std::complex<double>> monic(static_cast<std::size_t>(d) + 1);
  for (int i = 0; i <= d; ++i) {
    monic[static_cast<std::size_t>(i)] =
        coeffs[static_cast<std::size_t>(i)] / coeffs[static_cast<std::size_t>(d)];
  }
  std::vector<std::complex<double>> roots(static_cast<std::size_t>(d));
  std::complex<double> base(0.4, 0.9);
  std::complex<double> acc(1.0, 0.0);
  for (auto& r : roots) {
    acc *= base;
    r = acc;
  }
  auto eval = [&](std::complex<double> z) {
    std::complex<double> v(0.0, 0.0);
    for (int i = d; i >= 0; --i) v = v * z + monic[static_cast<std::size_t>(i)];
    return v;
  };
  for (int iter = 0; iter < 200; ++iter) {
    double step = 0.0;
    for (std::size_t i = 0; i < roots.size(); ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (std::size_t j = 0; j < roots.size(); ++j) {
        if (j != i) denom *= roots[i] - roots[j];
      }
      if (std::abs(denom) < 1e-30) continue;
      std::complex<double> delta = eval(roots[i]) / denom;
      roots[i] -= delta;
      step = std::max(step, std::abs(delta));
    }
    if (step < 1e-12) break;
  }
  return roots;
}

bool roots_outside_unit_circle(const std::vector<double>& poly) {
  for (const auto& r : poly_roots(poly)) {
    if (std::abs(r) <= 1.0 + 1e-9) return false;
  }
  return true;
}

// Innovation proxies from a long autoregression (zero before the fit
// window starts).
std::vector<double> long_ar_innovations(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::size_t lag = static_cast<std::size_t>(10.0 * std::log10(static_cast<double>(n)));
  lag = std::clamp<std::size_t>(lag, 1, n / 4);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  rows.reserve(n - lag);
  for (std::size_t t = lag; t < n; ++t) {
    std::vector<double> row(lag);
    for (std::size_t j = 0; j < lag; ++j) row[j] = x[t - 1 - j];
    rows.push_back(std::move(row));
    y.push_back(x[t]);
  }
  std::vector<double> a = least_squares(rows, y);
  std::vector<double> e(n, 0.0);
  for (std::size_t t = lag; t < n; ++t) {
    double pred = 0.0;
    for (std::size_t j = 0; j < lag; ++j) pred += a[j] * x[t - 1 - j];
    e[t] = x[t] - pred;
  }
  return e;
}

struct Regression {
  std::vector<double> phi, theta;
  double sigma2 = 0.0;
};

Regression arma_regression(const std::vector<double>& x, const std::vector<double>& e, int p,
                           int q, std::size_t start) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (std::size_t t = start; t < n; ++t) {
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(p + q));
    for (int k = 1; k <= p; ++k) row.push_back(x[t - static_cast<std::size_t>(k)]);
    for (int k = 1; k <= q; ++k) row.push_back(e[t - static_cast<std::size_t>(k)]);
    rows.push_back(std::move(row));
    y.push_back(x[t]);
  }
  std::vector<double> beta = least_squares(rows, y);
  Regression result;
  result.phi.assign(beta.begin(), beta.begin() + p);
  result.theta.assign(beta.begin() + p, beta.end());
  double rss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double pred = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) pred += beta[j] * rows[r][j];
    const double resid = y[r] - pred;
    rss += resid * resid;
  }
  result.sigma2 = rss / static_cast<double>(rows.size());
  return result;
}

}  // namespace

ArmaModel fit_arma(const std::vector<double>& series, int p, int q,
                   std::vector<std::string>* warnings) {
  if (p < 0 || q < 0) throw ConfigError("ARMA orders must be non-negative");
  const std::size_t n = series.size();
  const std::size_t need = 20 * static_cast<std::size_t>(p + q + 1);
  if (n < need) {
    throw DataError("insufficient data: " + std::to_string(n) + " observations, need " +
                    std::to_string(need) + " for ARMA(" + std::to_string(p) + "," +
                    std::to_string(q) + ")");
  }

  ArmaModel model;
  model.p = p;
  model.q = q;
  model.mu = mean_of(series);
  model.phi.assign(static_cast<std::size_t>(p), 0.0);
  model.theta.assign(static_cast<std::size_t>(q), 0.0);

  std::vector<double> x(series);
  for (auto& v : x) v -= model.mu;
  const double var = variance_of(x, 0.0);
  if (var < 1e-24) {
    // Constant residual series: the mean is the whole model.
    model.sigma2 = 0.0;
    if (warnings && (p > 0 || q > 0)) {
      warnings->push_back("residual series is constant; AR/MA terms set to zero");
    }
    return model;
  }
  if (p == 0 && q == 0) {
    model.sigma2 = var;
    return model;
  }

  std::vector<double> innov;
  std::size_t start;
  if (q > 0) {
    innov = long_ar_innovations(x);
    std::size_t lag = static_cast<std::size_t>(10.0 * std::log10(static_cast<double>(n)));
    lag = std::clamp<std::size_t>(lag, 1, n / 4);
    start = std::max<std::size_t>(static_cast<std::size_t>(p), lag + static_cast<std::size_t>(q));
  } else {
    innov.assign(n, 0.0);
    start = static_cast<std::size_t>(p);
  }

  Regression reg = arma_regression(x, innov, p, q, start);
  model.phi = reg.phi;
  model.theta = reg.theta;
  model.sigma2 = reg.sigma2;

  // Re-estimate innovations under the fitted model and refit; improves on
  // the long-AR proxy at small orders.
  for (int round = 0; round < 2 && q > 0; ++round) {
    std::vector<double> e = filter_innovations(model, series);
    try {
      Regression refined =
          arma_regression(x, e, p, q, static_cast<std::size_t>(std::max(p, q)));
      model.phi = refined.phi;
      model.theta = refined.theta;
      model.sigma2 = refined.sigma2;
    } catch (const DataError&) {
      break;  // keep the previous round's estimates
    }
  }

  std::vector<double> ar_poly(static_cast<std::size_t>(p) + 1);
  ar_poly[0] = 1.0;
  for (int k = 1; k <= p; ++k) ar_poly[static_cast<std::size_t>(k)] = -model.phi[k - 1];
  model.causal = roots_outside_unit_circle(ar_poly);
  std::vector<double> ma_poly(static_cast<std::size_t>(q) + 1);
  ma_poly[0] = 1.0;
  for (int k = 1; k <= q; ++k) ma_poly[static_cast<std::size_t>(k)] = model.theta[k - 1];
  model.invertible = roots_outside_unit_circle(ma_poly);
  if (warnings) {
    if (!model.causal) warnings->push_back("fitted AR polynomial is not causal");
    if (!model.invertible) warnings->push_back("fitted MA polynomial is not invertible");
  }
  return model;
}

std::pair<int, int> select_order(const std::vector<double>& series, int p_max, int q_max,
                                 std::vector<std::string>* warnings) {
  const double n = static_cast<double>(series.size());
  double best_bic = std::numeric_limits<double>::infinity();
  int best_p = -1, best_q = -1;
  for (int p = 0; p <= p_max; ++p) {
    for (int q = 0; q <= q_max; ++q) {
      double bic;
      try {
        ArmaModel m = fit_arma(series, p, q);
        bic = n * std::log(std::max(m.sigma2, 1e-300)) +
              static_cast<double>(p + q + 1) * std::log(n);
      } catch (const DataError&) {
        continue;
      }
      const bool better =
          bic < best_bic - 1e-9 ||
          (std::abs(bic - best_bic) <= 1e-9 &&
           (p + q < best_p + best_q || (p + q == best_p + best_q && p < best_p)));
      if (best_p < 0 || better) {
        best_bic = bic;
        best_p = p;
        best_q = q;
      }
    }
  }
  if (best_p < 0) {
    if (warnings) warnings->push_back("every ARMA candidate failed to fit; using (1,1)");
    return {1, 1};
  }
  return {best_p, best_q};
}

double forecast_delta(const ArmaModel& model, const std::vector<double>& recent_residuals,
                      const std::vector<double>& recent_innovations) {
  if (recent_residuals.size() < static_cast<std::size_t>(model.p) ||
      recent_innovations.size() < static_cast<std::size_t>(model.q)) {
    throw DataError("insufficient history: forecast needs " + std::to_string(model.p) +
                    " residuals and " + std::to_string(model.q) + " innovations");
  }
  double forecast = model.mu;
  const std::size_t nr = recent_residuals.size();
  for (int k = 1; k <= model.p; ++k) {
    forecast += model.phi[k - 1] * (recent_residuals[nr - static_cast<std::size_t>(k)] - model.mu);
  }
  const std::size_t ne = recent_innovations.size();
  for (int k = 1; k <= model.q; ++k) {
    forecast += model.theta[k - 1] * recent_innovations[ne - static_cast<std::size_t>(k)];
  }
  return forecast;
}

std::vector<double> filter_innovations(const ArmaModel& model,
                                       const std::vector<double>& series) {
  const std::size_t n = series.size();
  std::vector<double> e(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double pred = model.mu;
    for (int k = 1; k <= model.p; ++k) {
      if (t >= static_cast<std::size_t>(k)) {
        pred += model.phi[k - 1] * (series[t - static_cast<std::size_t>(k)] - model.mu);
      }
    }
    for (int k = 1; k <= model.q; ++k) {
      if (t >= static_cast<std::size_t>(k)) {
        pred += model.theta[k - 1] * e[t - static_cast<std::size_t>(k)];
      }
    }
    e[t] = series[t] - pred;
  }
  return e;
}

std::vector<double> simulate_arma(const ArmaModel& model, std::size_t n, std::uint64_t seed) {
  const std::size_t burn = 200;
  Rng rng(seed, /*stream=*/0x41524d41);  // "ARMA"
  const double sigma = std::sqrt(std::max(model.sigma2, 0.0));
  std::vector<double> x(n + burn, model.mu), e(n + burn, 0.0);
  for (std::size_t t = 0; t < n + burn; ++t) {
    const double eps = sigma * rng.normal();
    double v = model.mu + eps;
    for (int k = 1; k <= model.p; ++k) {
      if (t >= static_cast<std::size_t>(k)) {
        v += model.phi[k - 1] * (x[t - static_cast<std::size_t>(k)] - model.mu);
      }
    }
    for (int k = 1; k <= model.q; ++k) {
      if (t >= static_cast<std::size_t>(k)) {
        v += model.theta[k - 1] * e[t - static_cast<std::size_t>(k)];
      }
    }
    x[t] = v;
    e[t] = eps;
  }
  return std::vector<double>(x.begin() + burn, x.end());
}

CalibratedSeries calibrate_series(const std::vector<double>& y_pred,
                                  const std::vector<double>& y_true,
                                  const CalibrationConfig& config) {
  if (y_pred.size() != y_true.size()) {
    throw ConfigError("prediction and truth series must be hourly aligned");
  }
  const std::size_t n = y_pred.size();
  if (n < static_cast<std::size_t>(config.min_fit_hours)) {
    throw DataError("calibration window exceeds available history: " + std::to_string(n) +
                    " hours < " + std::to_string(config.min_fit_hours));
  }

  CalibratedSeries out;
  out.calibrated.resize(n);
  out.delta_hat.assign(n, 0.0);

  std::vector<double> resid;  // truths observed so far
  resid.reserve(n);
  ArmaModel model;
  bool have_model = false;
  std::vector<double> innov;  // innovations under the current model
  long last_fit = -1;

  for (std::size_t i = 0; i < n; ++i) {
    const bool due = !have_model || static_cast<long>(i) - last_fit >=
                                        static_cast<long>(config.refit_hours);
    if (i >= static_cast<std::size_t>(config.min_fit_hours) && due) {
      const std::size_t begin =
          i > static_cast<std::size_t>(config.window_hours)
              ? i - static_cast<std::size_t>(config.window_hours)
              : 0;
      std::vector<double> window(resid.begin() + static_cast<std::ptrdiff_t>(begin),
                                 resid.end());
      auto [p, q] = select_order(window, config.p_max, config.q_max);
      model = fit_arma(window, p, q);
      innov = filter_innovations(model, window);
      have_model = true;
      last_fit = static_cast<long>(i);
    }

    double dh = 0.0;
    if (have_model) dh = forecast_delta(model, resid, innov);
    out.delta_hat[i] = dh;
    out.calibrated[i] = y_pred[i] + dh;

    // Hour i settles: its residual (and innovation) become available.
    const double r = y_true[i] - y_pred[i];
    resid.push_back(r);
    if (have_model) innov.push_back(r - dh);
  }
  return out;
}

}  // namespace lmpgan

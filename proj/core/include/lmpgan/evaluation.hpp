#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lmpgan {

struct MapeResult {
  double percent = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // hours with |y_true| <= eps_den
};

// Mean absolute percentage error, excluding hours whose truth is within
// eps_den of zero (|y| is used in the denominator, so negative prices are
// handled). Throws DataError when every hour is excluded.
MapeResult mape(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                double eps_den = 0.01);

// Pairwise Pearson correlations between zone series; entries involving a
// zero-variance zone are NaN (undefined) and excluded from distances.
struct CorrelationMatrix {
  int k = 0;
  std::vector<double> rho;  // row-major k*k
  double at(int i, int j) const { return rho[static_cast<std::size_t>(i) * k + j]; }
};

CorrelationMatrix spatial_correlation_matrix(const std::vector<std::vector<double>>& zones);

// Frobenius distance between two correlation matrices, skipping entries
// undefined in either.
double frobenius_distance(const CorrelationMatrix& a, const CorrelationMatrix& b);

struct BaselineMapes {
  MapeResult persistence_1h;
  MapeResult persistence_24h;
};

// Naive repeat-last-value baselines over truth series that include at
// least 24 hours of history before span_begin.
BaselineMapes persistence_baselines(const std::vector<std::vector<double>>& zone_truths,
                                    std::size_t span_begin, std::size_t span_len,
                                    double eps_den = 0.01);

// A truth spike is an hour where y exceeds multiplier x the trailing-168h
// median; it is captured when the prediction also exceeds that threshold.
// Requires >= 168 hours of truth history before the scored span. Returns
// nullopt (N/A) when the span contains no truth spikes.
std::optional<double> spike_recall(const std::vector<double>& y_true,
                                   const std::vector<double>& y_pred, std::size_t span_begin,
                                   std::size_t span_len, double multiplier = 3.0);

struct ScoreReport {
  std::vector<std::string> zones;
  std::vector<double> zone_mape;  // percent, aligned with zones
  MapeResult aggregate;           // pooled over all (zone, hour) pairs
  BaselineMapes baselines;
  CorrelationMatrix corr_pred;
  CorrelationMatrix corr_truth;
  double corr_frobenius = 0.0;
  std::optional<double> spike_recall;  // pooled across zones
  double spike_multiplier = 3.0;
};

// Scores a prediction span. zone_truths cover [0, span_begin + span_len)
// per zone; zone_preds cover the scored span only (span_len hours).
ScoreReport build_score_report(const std::vector<std::string>& zone_names,
                               const std::vector<std::vector<double>>& zone_truths,
                               const std::vector<std::vector<double>>& zone_preds,
                               std::size_t span_begin, double eps_den,
                               double spike_multiplier);

void write_score_csv(const std::string& path, const ScoreReport& report);
std::string format_score_table(const ScoreReport& report);

}  // namespace lmpgan

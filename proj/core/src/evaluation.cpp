#include "lmpgan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lmpgan/errors.hpp"

namespace lmpgan {

MapeResult mape(const std::vector<double>& y_true, const std::vector<double>& y_pred,
                double eps_den) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw ConfigError("mape: series must be aligned and non-empty");
  }
  MapeResult result;
  double acc = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double denom = std::abs(y_true[i]);
    if (denom <= eps_den) {
      ++result.excluded;
      continue;
    }
    acc += std::abs(y_true[i] - y_pred[i]) / denom;
    ++result.used;
  }
  if (result.used == 0) {
    throw DataError("mape: every hour was excluded by the near-zero denominator rule");
  }
  result.percent = 100.0 * acc / static_cast<double>(result.used);
  return result;
}

CorrelationMatrix spatial_correlation_matrix(const std::vector<std::vector<double>>& zones) {
  const int k = static_cast<int>(zones.size());
  if (k == 0) throw ConfigError("correlation matrix needs at least one zone");
  const std::size_t n = zones[0].size();
  if (n < 2) throw DataError("correlation matrix needs at least 2 hours");
  for (const auto& z : zones) {
    if (z.size() != n) throw ConfigError("zone series must be aligned");
  }
  std::vector<double> mean(k, 0.0), sd(k, 0.0);
  for (int z = 0; z < k; ++z) {
    for (double v : zones[z]) mean[z] += v;
    mean[z] /= static_cast<double>(n);
    for (double v : zones[z]) sd[z] += (v - mean[z]) * (v - mean[z]);
    sd[z] = std::sqrt(sd[z]);
  }
  CorrelationMatrix matrix;
  matrix.k = k;
  matrix.rho.assign(static_cast<std::size_t>(k) * k, 0.0);
  const double nan = std::nan("");
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      double value;
      if (a == b) {
        value = sd[a] > 0.0 ? 1.0 : nan;
      } else if (sd[a] == 0.0 || sd[b] == 0.0) {
        value = nan;
      } else {
        double cov = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
          cov += (zones[a][t] - mean[a]) * (zones[b][t] - mean[b]);
        }
        value = cov / (sd[a] * sd[b]);
      }
      matrix.rho[static_cast<std::size_t>(a) * k + b] = value;
      matrix.rho[static_cast<std::size_t>(b) * k + a] = value;
    }
  }
  return matrix;
}

double frobenius_distance(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  if (a.k != b.k) throw ConfigError("correlation matrices have different sizes");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.rho.size(); ++i) {
    if (std::isnan(a.rho[i]) || std::isnan(b.rho[i])) continue;
    const double d = a.rho[i] - b.rho[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

BaselineMapes persistence_baselines(const std::vector<std::vector<double>>& zone_truths,
                                    std::size_t span_begin, std::size_t span_len,
                                    double eps_den) {
  if (span_begin < 24) {
    throw DataError("persistence baselines need at least 24 hours of history");
  }
  std::vector<double> truth, lag1, lag24;
  for (const auto& z : zone_truths) {
    if (z.size() < span_begin + span_len) {
      throw DataError("truth series shorter than the scored span");
    }
    for (std::size_t t = span_begin; t < span_begin + span_len; ++t) {
      truth.push_back(z[t]);
      lag1.push_back(z[t - 1]);
      lag24.push_back(z[t - 24]);
    }
  }
  BaselineMapes result;
  result.persistence_1h = mape(truth, lag1, eps_den);
  result.persistence_24h = mape(truth, lag24, eps_den);
  return result;
}

namespace {

double trailing_median(const std::vector<double>& series, std::size_t t, std::size_t window) {
  std::vector<double> buf(series.begin() + static_cast<std::ptrdiff_t>(t - window),
                          series.begin() + static_cast<std::ptrdiff_t>(t));
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2),
                   buf.end());
  double upper = buf[buf.size() / 2];
  std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2 - 1),
                   buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2));
  return 0.5 * (upper + buf[buf.size() / 2 - 1]);
}

}  // namespace

std::optional<double> spike_recall(const std::vector<double>& y_true,
                                   const std::vector<double>& y_pred, std::size_t span_begin,
                                   std::size_t span_len, double multiplier) {
  if (span_begin < 168) {
    throw DataError("spike recall needs at least 168 hours of truth history");
  }
  if (y_true.size() < span_begin + span_len || y_pred.size() < span_len) {
    throw ConfigError("spike recall: series shorter than the scored span");
  }
  std::size_t spikes = 0, captured = 0;
  for (std::size_t t = span_begin; t < span_begin + span_len; ++t) {
    const double threshold = multiplier * trailing_median(y_true, t, 168);
    if (y_true[t] > threshold) {
      ++spikes;
      if (y_pred[t - span_begin] > threshold) ++captured;
    }
  }
  if (spikes == 0) return std::nullopt;
  return static_cast<double>(captured) / static_cast<double>(spikes);
}

ScoreReport build_score_report(const std::vector<std::string>& zone_names,
                               const std::vector<std::vector<double>>& zone_truths,
                               const std::vector<std::vector<double>>& zone_preds,
                               std::size_t span_begin, double eps_den,
                               double spike_multiplier) {
  if (zone_names.size() != zone_truths.size() || zone_names.size() != zone_preds.size()) {
    throw ConfigError("score report inputs are misaligned");
  }
  const std::size_t span_len = zone_preds.empty() ? 0 : zone_preds[0].size();
  ScoreReport report;
  report.zones = zone_names;
  report.spike_multiplier = spike_multiplier;

  std::vector<double> pooled_truth, pooled_pred;
  std::vector<std::vector<double>> truth_span(zone_names.size());
  for (std::size_t z = 0; z < zone_names.size(); ++z) {
    const auto& truth = zone_truths[z];
    const auto& pred = zone_preds[z];
    if (pred.size() != span_len || truth.size() < span_begin + span_len) {
      throw ConfigError("score report: zone series misaligned with the scored span");
    }
    std::vector<double> t(truth.begin() + static_cast<std::ptrdiff_t>(span_begin),
                          truth.begin() + static_cast<std::ptrdiff_t>(span_begin + span_len));
    report.zone_mape.push_back(mape(t, pred, eps_den).percent);
    pooled_truth.insert(pooled_truth.end(), t.begin(), t.end());
    pooled_pred.insert(pooled_pred.end(), pred.begin(), pred.end());
    truth_span[z] = std::move(t);
  }
  report.aggregate = mape(pooled_truth, pooled_pred, eps_den);
  report.baselines = persistence_baselines(zone_truths, span_begin, span_len, eps_den);
  report.corr_pred = spatial_correlation_matrix(zone_preds);
  report.corr_truth = spatial_correlation_matrix(truth_span);
  report.corr_frobenius = frobenius_distance(report.corr_pred, report.corr_truth);

  // Pooled spike recall: accumulate counts across zones.
  if (span_begin >= 168) {
    std::size_t spikes = 0, captured = 0;
    for (std::size_t z = 0; z < zone_names.size(); ++z) {
      for (std::size_t t = span_begin; t < span_begin + span_len; ++t) {
        const double threshold =
            spike_multiplier * trailing_median(zone_truths[z], t, 168);
        if (zone_truths[z][t] > threshold) {
          ++spikes;
          if (zone_preds[z][t - span_begin] > threshold) ++captured;
        }
      }
    }
    if (spikes > 0) {
      report.spike_recall = static_cast<double>(captured) / static_cast<double>(spikes);
    }
  }
  return report;
}

void write_score_csv(const std::string& path, const ScoreReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open score report '" + path + "' for writing");
  char buf[128];
  out << "metric,zone,value\n";
  for (std::size_t z = 0; z < report.zones.size(); ++z) {
    std::snprintf(buf, sizeof(buf), "mape,%s,%.6g\n", report.zones[z].c_str(),
                  report.zone_mape[z]);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf), "mape_aggregate,,%.6g\n", report.aggregate.percent);
  out << buf;
  std::snprintf(buf, sizeof(buf), "mape_excluded_hours,,%zu\n", report.aggregate.excluded);
  out << buf;
  std::snprintf(buf, sizeof(buf), "mape_persistence_1h,,%.6g\n",
                report.baselines.persistence_1h.percent);
  out << buf;
  std::snprintf(buf, sizeof(buf), "mape_persistence_24h,,%.6g\n",
                report.baselines.persistence_24h.percent);
  out << buf;
  std::snprintf(buf, sizeof(buf), "corr_frobenius,,%.6g\n", report.corr_frobenius);
  out << buf;
  if (report.spike_recall) {
    std::snprintf(buf, sizeof(buf), "spike_recall,,%.6g\n", *report.spike_recall);
    out << buf;
  } else {
    out << "spike_recall,,N/A\n";
  }
  for (int i = 0; i < report.corr_pred.k; ++i) {
    for (int j = 0; j < report.corr_pred.k; ++j) {
      std::snprintf(buf, sizeof(buf), "corr_pred_%d_%d,,%.6g\n", i, j,
                    report.corr_pred.at(i, j));
      out << buf;
    }
  }
  for (int i = 0; i < report.corr_truth.k; ++i) {
    for (int j = 0; j < report.corr_truth.k; ++j) {
      std::snprintf(buf, sizeof(buf), "corr_truth_%d_%d,,%.6g\n", i, j,
                    report.corr_truth.at(i, j));
      out << buf;
    }
  }
}

std::string format_score_table(const ScoreReport& report) {
  std::ostringstream out;
  char buf[160];
  out << "zone            MAPE(%)\n";
  out << "----------------------\n";
  for (std::size_t z = 0; z < report.zones.size(); ++z) {
    std::snprintf(buf, sizeof(buf), "%-14s %8.3f\n", report.zones[z].c_str(),
                  report.zone_mape[z]);
    out << buf;
  }
  out << "----------------------\n";
  std::snprintf(buf, sizeof(buf), "aggregate MAPE       %8.3f%%  (%zu hours, %zu excluded)\n",
                report.aggregate.percent, report.aggregate.used, report.aggregate.excluded);
  out << buf;
  std::snprintf(buf, sizeof(buf), "1h persistence MAPE  %8.3f%%\n",
                report.baselines.persistence_1h.percent);
  out << buf;
  std::snprintf(buf, sizeof(buf), "24h persistence MAPE %8.3f%%\n",
                report.baselines.persistence_24h.percent);
  out << buf;
  std::snprintf(buf, sizeof(buf), "corr-matrix Frobenius distance %.4f\n",
                report.corr_frobenius);
  out << buf;
  if (report.spike_recall) {
    std::snprintf(buf, sizeof(buf), "spike recall (%.1fx trailing median) %.3f\n",
                  report.spike_multiplier, *report.spike_recall);
    out << buf;
  } else {
    std::snprintf(buf, sizeof(buf), "spike recall (%.1fx trailing median) N/A\n",
                  report.spike_multiplier);
    out << buf;
  }
  return out.str();
}

}  // namespace lmpgan

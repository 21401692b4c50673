#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmpgan/arma.hpp"
#include "lmpgan/gan.hpp"
#include "lmpgan/market_data.hpp"

namespace lmpgan {

// One plain-text key=value file describes an entire run; '#' starts a
// comment. CLI flags override file values. See README for the schema.
struct RunConfig {
  // Paths
  std::string data_csv;
  std::string normalized_csv = "normalized.csv";
  std::string stats_file = "norm_stats.csv";
  std::string checkpoint = "model.ckpt";
  std::string log_file = "training_log.csv";
  std::string predictions_csv = "predictions.csv";
  std::string calibrated_csv = "calibrated.csv";
  std::string report_csv = "score_report.csv";

  GridLayout layout;
  std::vector<std::string> features = {"RTLMP", "DALMP", "DEMAND"};

  // Span boundaries (inclusive hours). Normalization stats are fitted on
  // [*, train_end]; prediction and scoring run on [test_start, test_end].
  std::int64_t train_end = 0;
  std::int64_t test_start = 0;
  std::int64_t test_end = 0;

  GanConfig gan;
  CalibrationConfig calibration;
  double eps_den = 0.01;
  double spike_multiplier = 3.0;
  std::uint64_t seed = 1;

  // Synthetic generation
  std::size_t synth_hours = 2160;
  double synth_spike_rate = 0.004;

  static RunConfig from_file(const std::string& path);
  // Applies a single "key=value" override; throws ConfigError on unknown
  // keys or bad values.
  void apply(const std::string& key, const std::string& value);
  void validate() const;
};

}  // namespace lmpgan

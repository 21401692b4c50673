#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "lmpgan/run_config.hpp"

namespace lmpgan {

// CLI command bodies. Each prints a short summary to `out` and reports
// failure through the typed errors (ConfigError / DataError /
// NumericError), which the CLI maps to exit codes 1 / 2 / 3.

// Writes a synthetic data CSV to config.data_csv.
void cmd_synth(const RunConfig& config, std::ostream& out);

// Reads config.data_csv, fits normalization stats on [*, train_end],
// writes the normalized CSV and the stats file.
void cmd_ingest(const RunConfig& config, std::ostream& out);

// Trains on normalized frames with target <= train_end; checkpoints and
// the loss log land at config.checkpoint / config.log_file. With resume,
// continues from the checkpoint's recorded iteration.
void cmd_train(const RunConfig& config, bool resume, std::ostream& out);

// Teacher-forced hour-by-hour prediction over [test_start, test_end];
// writes "timestamp,zone,y_true,y_gan" in $/MWh.
void cmd_predict(const RunConfig& config, std::ostream& out);

// Walk-forward residual calibration of the prediction file; writes
// "timestamp,zone,y_true,y_gan,delta_hat,y_calibrated".
void cmd_calibrate(const RunConfig& config, std::ostream& out);

// Scores predictions (or the calibrated series) against truth; writes the
// report CSV and prints the summary table.
void cmd_evaluate(const RunConfig& config, bool use_calibrated, std::ostream& out);

// Renders the normalized frame at an ISO-8601 hour to a P6 PPM.
void cmd_render_frame(const RunConfig& config, const std::string& timestamp,
                      const std::string& out_path, std::ostream& out);

// Renders a correlation heatmap; source is "pred", "truth" or
// "calibrated".
void cmd_render_corr(const RunConfig& config, const std::string& source,
                     const std::string& out_path, std::ostream& out);

}  // namespace lmpgan

#include "lmpgan/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "lmpgan/errors.hpp"
#include "lmpgan/evaluation.hpp"
#include "lmpgan/gan.hpp"
#include "lmpgan/ppm.hpp"
#include "lmpgan/synth.hpp"

namespace lmpgan {

namespace {

struct PredictionTable {
  std::vector<std::int64_t> timestamps;
  std::vector<std::vector<double>> y_true;  // [zone][hour]
  std::vector<std::vector<double>> y_pred;
};

PredictionTable read_prediction_csv(const std::string& path, const GridLayout& layout,
                                    const char* pred_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prediction file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::istringstream hs(line);
  std::vector<std::string> header;
  std::string col;
  while (std::getline(hs, col, ',')) header.push_back(col);
  int ts_col = -1, zone_col = -1, true_col = -1, pred_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "timestamp") ts_col = static_cast<int>(i);
    if (header[i] == "zone") zone_col = static_cast<int>(i);
    if (header[i] == "y_true") true_col = static_cast<int>(i);
    if (header[i] == pred_column) pred_col = static_cast<int>(i);
  }
  if (ts_col < 0 || zone_col < 0 || true_col < 0 || pred_col < 0) {
    throw DataError(path + ": header must contain timestamp, zone, y_true and " +
                    std::string(pred_column));
  }

  PredictionTable table;
  const int zones = layout.zone_count();
  table.y_true.resize(zones);
  table.y_pred.resize(zones);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    while (std::getline(ss, col, ',')) fields.push_back(col);
    if (fields.size() != header.size()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": wrong field count");
    }
    const std::int64_t ts = parse_iso8601_utc_hour(fields[ts_col]);
    const int z = layout.index_of(fields[zone_col]);
    if (z < 0) {
      throw DataError(path + ":" + std::to_string(lineno) + ": unknown zone '" +
                      fields[zone_col] + "'");
    }
    if (z == 0) table.timestamps.push_back(ts);
    table.y_true[z].push_back(std::stod(fields[true_col]));
    table.y_pred[z].push_back(std::stod(fields[pred_col]));
  }
  if (table.timestamps.empty()) throw DataError(path + ": no data rows");
  for (int z = 0; z < zones; ++z) {
    if (table.y_true[z].size() != table.timestamps.size()) {
      throw DataError(path + ": zone '" + layout.zone_order[z] + "' is missing hours");
    }
  }
  return table;
}

// Per-zone truth series over the whole raw video.
std::vector<std::vector<double>> zone_price_series(const MarketVideo& video) {
  const int zones = video.layout.zone_count();
  std::vector<std::vector<double>> series(zones);
  for (int z = 0; z < zones; ++z) {
    int r, c;
    video.layout.cell_of(z, r, c);
    series[z].reserve(video.frame_count());
    for (const auto& frame : video.frames) {
      series[z].push_back(
          frame.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 0));
    }
  }
  return series;
}

std::vector<Sample> training_samples(const MarketVideo& normalized, int n,
                                     std::int64_t train_end) {
  std::vector<Sample> all = window(normalized, n);
  std::vector<Sample> kept;
  for (auto& s : all) {
    if (train_end == 0 || s.target_timestamp <= train_end) kept.push_back(std::move(s));
  }
  if (kept.empty()) throw DataError("no training samples before train_end");
  return kept;
}

}  // namespace

void cmd_synth(const RunConfig& config, std::ostream& out) {
  config.layout.validate();
  if (config.data_csv.empty()) throw ConfigError("data_csv must be set");
  SynthConfig sc;
  sc.seed = config.seed;
  sc.layout = config.layout;
  sc.hours = config.synth_hours;
  sc.spike_rate = config.synth_spike_rate;
  MarketVideo video = synth_market(sc);
  write_market_csv(config.data_csv, video);
  out << "wrote " << video.frame_count() * static_cast<std::size_t>(config.layout.zone_count())
      << " rows (" << video.frame_count() << " hours x " << config.layout.zone_count()
      << " zones) to " << config.data_csv << "\n";
}

void cmd_ingest(const RunConfig& config, std::ostream& out) {
  config.validate();
  if (config.data_csv.empty()) throw ConfigError("data_csv must be set");
  IngestResult ingest = ingest_csv(config.data_csv, config.layout, config.features);
  for (const auto& w : ingest.warnings) out << "warning: " << w << "\n";

  const std::int64_t fit_end =
      config.train_end != 0 ? config.train_end : ingest.video.frames.back().timestamp;
  NormStatsMap stats = fit_all_norm_stats(ingest.video, fit_end);
  std::vector<std::string> warnings;
  MarketVideo normalized = make_video(ingest.video, stats, &warnings);
  for (const auto& w : warnings) out << "warning: " << w << "\n";

  save_norm_stats(config.stats_file, config.features, stats);
  write_market_csv(config.normalized_csv, normalized);

  out << "read " << ingest.rows_read << " rows, " << ingest.video.frame_count()
      << " hourly frames (" << format_iso8601_utc(ingest.video.frames.front().timestamp)
      << " .. " << format_iso8601_utc(ingest.video.frames.back().timestamp) << ")\n";
  if (ingest.cells_filled > 0) {
    out << "forward-filled " << ingest.cells_filled << " missing cell(s)\n";
  }
  out << "stats fitted through " << format_iso8601_utc(fit_end) << " -> "
      << config.stats_file << "\n";
  out << "normalized data -> " << config.normalized_csv << "\n";
}

void cmd_train(const RunConfig& config, bool resume, std::ostream& out) {
  config.validate();
  IngestResult norm = ingest_csv(config.normalized_csv, config.layout, config.features);

  std::vector<Sample> samples = training_samples(norm.video, config.gan.n, config.train_end);
  // Hold out the most recent tenth (at least one minibatch) for the
  // early-stop validation metric.
  std::size_t val_count = samples.size() / 10;
  val_count = std::max<std::size_t>(val_count, static_cast<std::size_t>(config.gan.minibatch));
  if (val_count * 2 > samples.size()) val_count = 0;
  std::vector<Sample> val(samples.end() - static_cast<std::ptrdiff_t>(val_count),
                          samples.end());
  samples.resize(samples.size() - val_count);

  TrainHooks hooks;
  hooks.on_eval = [&](const TrainerState& state, const std::vector<TrainRecord>& log) {
    save_gan_checkpoint(config.checkpoint, state);
    write_training_log(config.log_file, log);
  };

  TrainResult result;
  if (resume) {
    TrainerState state = load_gan_checkpoint(config.checkpoint);
    out << "resuming from iteration " << state.iteration << "\n";
    result = train_continue(std::move(state), samples, val, hooks);
  } else {
    result = train(samples, val, config.gan, hooks);
  }

  // The eval hook persisted the checkpoint at the final iteration; the
  // log is rewritten once more to include any trailing records.
  write_training_log(config.log_file, result.log);

  out << "trained " << result.iterations << " iterations on " << samples.size()
      << " samples (" << val.size() << " validation)"
      << (result.early_stopped ? ", early-stopped" : "") << "\n";
  if (!result.log.empty()) {
    const TrainRecord& last = result.log.back();
    char buf[160];
    std::snprintf(buf, sizeof(buf), "final loss_D %.5f loss_G %.5f (lp %.5f) val_l2 %.5f\n",
                  last.loss_d, last.loss_g, last.lp, last.val_l2);
    out << buf;
  }
  out << "checkpoint -> " << config.checkpoint << ", log -> " << config.log_file << "\n";
}

void cmd_predict(const RunConfig& config, std::ostream& out) {
  config.validate();
  if (config.test_start == 0 || config.test_end == 0) {
    throw ConfigError("test_start and test_end must be set for prediction");
  }
  TrainerState state = load_gan_checkpoint(config.checkpoint);
  IngestResult norm = ingest_csv(config.normalized_csv, config.layout, config.features);
  IngestResult raw = ingest_csv(config.data_csv, config.layout, config.features);
  NormStatsMap stats = load_norm_stats(config.stats_file);
  auto it = stats.find("RTLMP");
  if (it == stats.end()) throw DataError("stats file lacks the RTLMP channel");

  MarketVideo pred = predict_series(state.model, norm.video, config.test_start, config.test_end);

  std::ofstream file(config.predictions_csv);
  if (!file) throw DataError("cannot open '" + config.predictions_csv + "' for writing");
  file << "timestamp,zone,y_true,y_gan\n";
  char buf[128];
  for (const auto& frame : pred.frames) {
    const int truth_idx = raw.video.frame_index_at(frame.timestamp);
    if (truth_idx < 0) {
      throw DataError("raw data lacks truth at " + format_iso8601_utc(frame.timestamp));
    }
    const MarketFrame& truth = raw.video.frames[static_cast<std::size_t>(truth_idx)];
    for (int z = 0; z < config.layout.zone_count(); ++z) {
      int r, c;
      config.layout.cell_of(z, r, c);
      const double y_gan = denormalize_value(
          frame.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 0),
          it->second);
      const double y_true =
          truth.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 0);
      std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g\n",
                    format_iso8601_utc(frame.timestamp).c_str(),
                    config.layout.zone_order[z].c_str(), y_true, y_gan);
      file << buf;
    }
  }
  out << "predicted " << pred.frame_count() << " hours x " << config.layout.zone_count()
      << " zones -> " << config.predictions_csv << "\n";
}

void cmd_calibrate(const RunConfig& config, std::ostream& out) {
  config.validate();
  PredictionTable table =
      read_prediction_csv(config.predictions_csv, config.layout, "y_gan");

  std::ofstream file(config.calibrated_csv);
  if (!file) throw DataError("cannot open '" + config.calibrated_csv + "' for writing");
  file << "timestamp,zone,y_true,y_gan,delta_hat,y_calibrated\n";

  const int zones = config.layout.zone_count();
  std::vector<CalibratedSeries> calibrated(zones);
  for (int z = 0; z < zones; ++z) {
    calibrated[z] = calibrate_series(table.y_pred[z], table.y_true[z], config.calibration);
  }
  char buf[192];
  for (std::size_t t = 0; t < table.timestamps.size(); ++t) {
    for (int z = 0; z < zones; ++z) {
      std::snprintf(buf, sizeof(buf), "%s,%s,%.10g,%.10g,%.10g,%.10g\n",
                    format_iso8601_utc(table.timestamps[t]).c_str(),
                    config.layout.zone_order[z].c_str(), table.y_true[z][t],
                    table.y_pred[z][t], calibrated[z].delta_hat[t],
                    calibrated[z].calibrated[t]);
      file << buf;
    }
  }
  out << "calibrated " << table.timestamps.size() << " hours x " << zones << " zones -> "
      << config.calibrated_csv << "\n";
}

void cmd_evaluate(const RunConfig& config, bool use_calibrated, std::ostream& out) {
  config.validate();
  const std::string& source = use_calibrated ? config.calibrated_csv : config.predictions_csv;
  PredictionTable table = read_prediction_csv(
      source, config.layout, use_calibrated ? "y_calibrated" : "y_gan");

  IngestResult raw = ingest_csv(config.data_csv, config.layout, config.features);
  const int span_idx = raw.video.frame_index_at(table.timestamps.front());
  if (span_idx < 0) throw DataError("raw data does not cover the prediction span");
  std::vector<std::vector<double>> truths = zone_price_series(raw.video);
  // Truncate truth series at the end of the scored span.
  const std::size_t span_end = static_cast<std::size_t>(span_idx) + table.timestamps.size();
  for (auto& z : truths) {
    if (z.size() < span_end) throw DataError("raw data does not cover the prediction span");
    z.resize(span_end);
  }

  ScoreReport report = build_score_report(config.layout.zone_order, truths, table.y_pred,
                                          static_cast<std::size_t>(span_idx), config.eps_den,
                                          config.spike_multiplier);
  write_score_csv(config.report_csv, report);
  out << format_score_table(report);
  out << "report -> " << config.report_csv << "\n";
}

void cmd_render_frame(const RunConfig& config, const std::string& timestamp,
                      const std::string& out_path, std::ostream& out) {
  config.validate();
  IngestResult norm = ingest_csv(config.normalized_csv, config.layout, config.features);
  const std::int64_t ts = parse_iso8601_utc_hour(timestamp);
  const int idx = norm.video.frame_index_at(ts);
  if (idx < 0) throw DataError("no frame at " + timestamp);
  write_frame_ppm(out_path, norm.video.frames[static_cast<std::size_t>(idx)]);
  out << "rendered " << timestamp << " -> " << out_path << "\n";
}

void cmd_render_corr(const RunConfig& config, const std::string& source,
                     const std::string& out_path, std::ostream& out) {
  config.validate();
  std::vector<std::vector<double>> series;
  if (source == "truth") {
    PredictionTable table =
        read_prediction_csv(config.predictions_csv, config.layout, "y_gan");
    series = table.y_true;
  } else if (source == "pred") {
    PredictionTable table =
        read_prediction_csv(config.predictions_csv, config.layout, "y_gan");
    series = table.y_pred;
  } else if (source == "calibrated") {
    PredictionTable table =
        read_prediction_csv(config.calibrated_csv, config.layout, "y_calibrated");
    series = table.y_pred;
  } else {
    throw ConfigError("render corr source must be pred, truth or calibrated");
  }
  CorrelationMatrix matrix = spatial_correlation_matrix(series);
  write_correlation_ppm(out_path, matrix);
  out << "rendered " << source << " correlation matrix -> " << out_path << "\n";
}

}  // namespace lmpgan

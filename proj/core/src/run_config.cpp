#include "lmpgan/run_config.hpp"

#include <fstream>
#include <sstream>

#include "lmpgan/errors.hpp"

namespace lmpgan {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int to_int(const std::string& key, const std::string& value) {
  try {
    return std::stoi(value);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    return std::stod(value);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" +
                      value + "'");
  }
}

std::int64_t to_timestamp(const std::string& key, const std::string& value) {
  try {
    return parse_iso8601_utc_hour(value);
  } catch (const DataError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig config;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      config.apply(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return config;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
  if (key == "data_csv") data_csv = value;
  else if (key == "normalized_csv") normalized_csv = value;
  else if (key == "stats_file") stats_file = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "log_file") log_file = value;
  else if (key == "predictions_csv") predictions_csv = value;
  else if (key == "calibrated_csv") calibrated_csv = value;
  else if (key == "report_csv") report_csv = value;
  else if (key == "rows") layout.rows = to_int(key, value);
  else if (key == "cols") layout.cols = to_int(key, value);
  else if (key == "zones") layout.zone_order = split_list(value);
  else if (key == "features") {
    features = split_list(value);
    gan.feature_channels = static_cast<int>(features.size());
  }
  else if (key == "train_end") train_end = to_timestamp(key, value);
  else if (key == "test_start") test_start = to_timestamp(key, value);
  else if (key == "test_end") test_end = to_timestamp(key, value);
  else if (key == "history_frames") gan.n = to_int(key, value);
  else if (key == "extra_channels") gan.extra_channels = to_int(key, value);
  else if (key == "lambda_adv") gan.lambda_adv = to_double(key, value);
  else if (key == "lambda_lp") gan.lambda_lp = to_double(key, value);
  else if (key == "lambda_gdl") gan.lambda_gdl = to_double(key, value);
  else if (key == "lambda_dcl") gan.lambda_dcl = to_double(key, value);
  else if (key == "p_norm") gan.p = to_int(key, value);
  else if (key == "gdl_alpha") gan.alpha = to_int(key, value);
  else if (key == "lr_g") gan.lr_g = to_double(key, value);
  else if (key == "lr_d") gan.lr_d = to_double(key, value);
  else if (key == "minibatch") gan.minibatch = to_int(key, value);
  else if (key == "max_iterations") gan.max_iterations = to_u64(key, value);
  else if (key == "eval_every") gan.eval_every = to_u64(key, value);
  else if (key == "filters1") gan.arch.filters1 = to_int(key, value);
  else if (key == "g_width3") gan.arch.g3 = to_int(key, value);
  else if (key == "g_width4") gan.arch.g4 = to_int(key, value);
  else if (key == "g_width5") gan.arch.g5 = to_int(key, value);
  else if (key == "d_width3") gan.arch.d3 = to_int(key, value);
  else if (key == "d_width4") gan.arch.d4 = to_int(key, value);
  else if (key == "d_width5") gan.arch.d5 = to_int(key, value);
  else if (key == "early_stop_rel") gan.early_stop_rel = to_double(key, value);
  else if (key == "early_stop_window") gan.early_stop_window = to_u64(key, value);
  else if (key == "window_hours") calibration.window_hours = to_int(key, value);
  else if (key == "refit_hours") calibration.refit_hours = to_int(key, value);
  else if (key == "p_max") calibration.p_max = to_int(key, value);
  else if (key == "q_max") calibration.q_max = to_int(key, value);
  else if (key == "min_fit_hours") calibration.min_fit_hours = to_int(key, value);
  else if (key == "eps_den") eps_den = to_double(key, value);
  else if (key == "spike_multiplier") spike_multiplier = to_double(key, value);
  else if (key == "seed") { seed = to_u64(key, value); gan.seed = seed; }
  else if (key == "synth_hours") synth_hours = to_u64(key, value);
  else if (key == "synth_spike_rate") synth_spike_rate = to_double(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  layout.validate();
  if (features.empty() || features[0] != "RTLMP") {
    throw ConfigError("features must start with RTLMP");
  }
  gan.validate();
  if (gan.feature_channels != static_cast<int>(features.size())) {
    throw ConfigError("internal: gan.feature_channels out of sync with the feature list");
  }
  if (calibration.window_hours < calibration.min_fit_hours) {
    throw ConfigError("window_hours must be >= min_fit_hours");
  }
  if (eps_den < 0.0) throw ConfigError("eps_den must be non-negative");
  if (spike_multiplier <= 1.0) throw ConfigError("spike_multiplier must exceed 1");
}

}  // namespace lmpgan

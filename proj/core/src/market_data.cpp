#include "lmpgan/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "lmpgan/errors.hpp"

namespace lmpgan {

int GridLayout::index_of(const std::string& zone) const {
  for (std::size_t i = 0; i < zone_order.size(); ++i) {
    if (zone_order[i] == zone) return static_cast<int>(i);
  }
  return -1;
}

void GridLayout::validate() const {
  if (rows <= 0 || cols <= 0) {
    throw ConfigError("grid layout must have positive rows and cols");
  }
  if (zone_order.size() != static_cast<std::size_t>(rows * cols)) {
    throw ConfigError("zone_order has " + std::to_string(zone_order.size()) +
                      " entries, expected " + std::to_string(rows * cols));
  }
  std::set<std::string> seen(zone_order.begin(), zone_order.end());
  if (seen.size() != zone_order.size()) {
    throw ConfigError("zone_order contains duplicate zone ids");
  }
}

int MarketVideo::frame_index_at(std::int64_t timestamp) const {
  if (frames.empty()) return -1;
  std::int64_t first = frames.front().timestamp;
  std::int64_t offset = (timestamp - first) / kHourSeconds;
  if (offset < 0 || offset >= static_cast<std::int64_t>(frames.size())) return -1;
  if (frames[static_cast<std::size_t>(offset)].timestamp != timestamp) return -1;
  return static_cast<int>(offset);
}

int MarketVideo::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i] == name) return static_cast<int>(i);
  }
  return -1;
}

void MarketVideo::validate() const {
  layout.validate();
  if (features.empty()) throw DataError("video has no feature channels");
  if (features[0] != "RTLMP") {
    throw DataError("video channel 0 must be RTLMP, got '" + features[0] + "'");
  }
  const std::vector<std::size_t> want{static_cast<std::size_t>(layout.rows),
                                      static_cast<std::size_t>(layout.cols),
                                      features.size()};
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].values.shape() != want) {
      throw DataError("frame " + std::to_string(i) + " has shape " +
                      nn::shape_string(frames[i].values.shape()) + ", expected " +
                      nn::shape_string(want));
    }
    if (!frames[i].values.all_finite()) {
      throw DataError("frame at " + format_iso8601_utc(frames[i].timestamp) +
                      " contains non-finite values");
    }
    if (i > 0 && frames[i].timestamp != frames[i - 1].timestamp + kHourSeconds) {
      throw DataError("frames are not gap-free hourly near " +
                      format_iso8601_utc(frames[i].timestamp));
    }
  }
}

NormStats fit_norm_stats(const MarketVideo& video, const std::string& feature) {
  return fit_norm_stats(video, feature, std::numeric_limits<std::int64_t>::max());
}

NormStats fit_norm_stats(const MarketVideo& video, const std::string& feature,
                         std::int64_t fit_end) {
  int ch = video.feature_index(feature);
  if (ch < 0) throw DataError("unknown feature '" + feature + "'");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  for (const auto& frame : video.frames) {
    if (frame.timestamp > fit_end) break;
    const auto& v = frame.values;
    for (std::size_t i = 0; i < v.dim(0); ++i) {
      for (std::size_t j = 0; j < v.dim(1); ++j) {
        double x = v.at3(i, j, static_cast<std::size_t>(ch));
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        ++used;
      }
    }
  }
  if (used == 0) throw DataError("cannot fit normalization stats on an empty video span");
  return NormStats{lo, hi - lo + 1.0};
}

NormStatsMap fit_all_norm_stats(const MarketVideo& video, std::int64_t fit_end) {
  NormStatsMap stats;
  for (const auto& f : video.features) stats[f] = fit_norm_stats(video, f, fit_end);
  return stats;
}

double normalize_value(double value, const NormStats& stats, bool* clamped) {
  if (stats.degenerate()) {
    throw DataError(
        "degenerate normalization stats (max_cplus <= 1): constant channels "
        "must be emitted as zeros, not normalized");
  }
  double shifted = value - stats.min_c + 1.0;
  if (shifted <= 0.0) {
    shifted = 1e-6;
    if (clamped) *clamped = true;
  }
  const double half_log = std::log(stats.max_cplus) / 2.0;
  return (std::log(shifted) - half_log) / half_log;
}

double denormalize_value(double norm_value, const NormStats& stats) {
  if (stats.degenerate()) {
    throw DataError("degenerate normalization stats cannot be inverted");
  }
  const double half_log = std::log(stats.max_cplus) / 2.0;
  return std::exp(norm_value * half_log + half_log) + stats.min_c - 1.0;
}

MarketVideo make_video(const MarketVideo& raw, const NormStatsMap& stats,
                       std::vector<std::string>* warnings) {
  MarketVideo out;
  out.layout = raw.layout;
  out.features = raw.features;
  out.frames.reserve(raw.frames.size());

  std::vector<const NormStats*> per_channel;
  std::vector<bool> degenerate;
  for (const auto& f : raw.features) {
    auto it = stats.find(f);
    if (it == stats.end()) throw DataError("no normalization stats for channel '" + f + "'");
    per_channel.push_back(&it->second);
    degenerate.push_back(it->second.degenerate());
    if (it->second.degenerate() && warnings) {
      warnings->push_back("channel '" + f + "' is constant on the fitting span; emitting zeros");
    }
  }

  std::size_t clamp_count = 0;
  for (const auto& frame : raw.frames) {
    MarketFrame nf;
    nf.timestamp = frame.timestamp;
    nf.values = nn::Tensor(frame.values.shape());
    const auto& v = frame.values;
    for (std::size_t i = 0; i < v.dim(0); ++i) {
      for (std::size_t j = 0; j < v.dim(1); ++j) {
        for (std::size_t c = 0; c < v.dim(2); ++c) {
          if (degenerate[c]) continue;  // stays 0
          bool clamped = false;
          nf.values.at3(i, j, c) = normalize_value(v.at3(i, j, c), *per_channel[c], &clamped);
          if (clamped) ++clamp_count;
        }
      }
    }
    out.frames.push_back(std::move(nf));
  }
  if (clamp_count > 0 && warnings) {
    warnings->push_back(std::to_string(clamp_count) +
                        " value(s) fell at or below the fitted minimum - 1 and were clamped; "
                        "possible distribution shift");
  }
  return out;
}

std::vector<Sample> window(const MarketVideo& video, int n) {
  if (n < 1) throw ConfigError("history length must be >= 1");
  const std::size_t total = video.frame_count();
  if (total <= static_cast<std::size_t>(n)) {
    throw DataError("video has " + std::to_string(total) + " frames; need at least " +
                    std::to_string(n + 1) + " for history length " + std::to_string(n));
  }
  const std::size_t rows = static_cast<std::size_t>(video.layout.rows);
  const std::size_t cols = static_cast<std::size_t>(video.layout.cols);

  std::vector<Sample> samples;
  samples.reserve(total - n);
  for (std::size_t i = 0; i + n < total; ++i) {
    Sample s;
    s.history.reserve(n);
    for (int k = 0; k < n; ++k) s.history.push_back(video.frames[i + k].values);
    const auto& tgt = video.frames[i + n];
    s.target = nn::Tensor({rows, cols, 1});
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        s.target.at3(r, c, 0) = tgt.values.at3(r, c, 0);
      }
    }
    s.target_timestamp = tgt.timestamp;
    samples.push_back(std::move(s));
  }
  return samples;
}

double feature_correlation(const MarketVideo& video, const std::string& feature,
                           const std::string& target) {
  int fc = video.feature_index(feature);
  int tc = video.feature_index(target);
  if (fc < 0) throw DataError("unknown feature '" + feature + "'");
  if (tc < 0) throw DataError("unknown feature '" + target + "'");

  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t n = 0;
  for (const auto& frame : video.frames) {
    const auto& v = frame.values;
    for (std::size_t i = 0; i < v.dim(0); ++i) {
      for (std::size_t j = 0; j < v.dim(1); ++j) {
        double x = v.at3(i, j, static_cast<std::size_t>(fc));
        double y = v.at3(i, j, static_cast<std::size_t>(tc));
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        ++n;
      }
    }
  }
  if (n < 2) throw DataError("need at least 2 observations for a correlation");
  const double nd = static_cast<double>(n);
  double vx = sxx - sx * sx / nd;
  double vy = syy - sy * sy / nd;
  if (vx <= 0.0 || vy <= 0.0) {
    throw DataError("zero variance in '" + (vx <= 0.0 ? feature : target) +
                    "'; correlation undefined");
  }
  return (sxy - sx * sy / nd) / std::sqrt(vx * vy);
}

void save_norm_stats(const std::string& path, const std::vector<std::string>& features,
                     const NormStatsMap& stats) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "feature,min_C,max_Cplus\n";
  char buf[128];
  for (const auto& f : features) {
    auto it = stats.find(f);
    if (it == stats.end()) throw DataError("no stats for feature '" + f + "'");
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", f.c_str(), it->second.min_c,
                  it->second.max_cplus);
    out << buf;
  }
}

NormStatsMap load_norm_stats(const std::string& path, std::vector<std::string>* feature_order) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stats file '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("feature,min_C,max_Cplus", 0) != 0) {
    throw DataError("stats file '" + path + "' has an unexpected header");
  }
  NormStatsMap stats;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string name, a, b;
    if (!std::getline(ss, name, ',') || !std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw DataError("stats file '" + path + "' line " + std::to_string(lineno) +
                      ": expected feature,min_C,max_Cplus");
    }
    try {
      stats[name] = NormStats{std::stod(a), std::stod(b)};
    } catch (const std::exception&) {
      throw DataError("stats file '" + path + "' line " + std::to_string(lineno) +
                      ": non-numeric value");
    }
    if (feature_order) feature_order->push_back(name);
  }
  return stats;
}

}  // namespace lmpgan

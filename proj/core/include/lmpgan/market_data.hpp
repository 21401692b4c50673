#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lmpgan/tensor.hpp"
#include "lmpgan/timeutil.hpp"

namespace lmpgan {

// Fixed zone-to-pixel assignment. zone_order is row-major: the zone at
// grid cell (i, j) is zone_order[i*cols + j].
struct GridLayout {
  int rows = 0;
  int cols = 0;
  std::vector<std::string> zone_order;

  int zone_count() const { return rows * cols; }
  // -1 when the zone is not part of the layout.
  int index_of(const std::string& zone) const;
  void cell_of(int zone_index, int& row, int& col) const {
    row = zone_index / cols;
    col = zone_index % cols;
  }
  bool operator==(const GridLayout&) const = default;
  void validate() const;  // throws ConfigError
};

// One hourly grid of market features, stored [rows, cols, channels].
struct MarketFrame {
  std::int64_t timestamp = 0;  // unix seconds, whole hour
  nn::Tensor values;
};

// Time-ordered, gap-free hourly sequence of frames over a fixed layout.
// Channel 0 is always the real-time price (RTLMP).
struct MarketVideo {
  GridLayout layout;
  std::vector<std::string> features;
  std::vector<MarketFrame> frames;

  int channels() const { return static_cast<int>(features.size()); }
  std::size_t frame_count() const { return frames.size(); }
  // Index of the frame with the given timestamp, -1 if absent.
  int frame_index_at(std::int64_t timestamp) const;
  int feature_index(const std::string& name) const;
  void validate() const;  // throws DataError on broken invariants
};

// Per-feature normalization statistics, fitted on the training span only.
// min_c is the smallest raw value; max_cplus = max(raw) - min_c + 1.
struct NormStats {
  double min_c = 0.0;
  double max_cplus = 1.0;
  bool degenerate() const { return !(max_cplus > 1.0); }
};

using NormStatsMap = std::map<std::string, NormStats>;

// A supervised pair: n consecutive history frames and the next-hour
// price channel.
struct Sample {
  std::vector<nn::Tensor> history;  // n frames, each [M, N, F]
  nn::Tensor target;                // [M, N, 1], price channel of frame n+1
  std::int64_t target_timestamp = 0;
};

NormStats fit_norm_stats(const MarketVideo& video, const std::string& feature);
// Restricts fitting to frames with timestamp <= fit_end.
NormStats fit_norm_stats(const MarketVideo& video, const std::string& feature,
                         std::int64_t fit_end);
NormStatsMap fit_all_norm_stats(const MarketVideo& video, std::int64_t fit_end);

// Log-scaled normalization mapping the fitted range onto [-1, 1]. Values
// below the fitted minimum may produce outputs < -1 (kept, not clamped);
// a shifted value <= 0 is clamped to 1e-6 and *clamped is set.
double normalize_value(double value, const NormStats& stats, bool* clamped = nullptr);
// Exact inverse of normalize_value for unclamped inputs.
double denormalize_value(double norm_value, const NormStats& stats);

// Applies per-channel normalization to every frame. Degenerate (constant)
// channels are emitted as all zeros with a warning.
MarketVideo make_video(const MarketVideo& raw, const NormStatsMap& stats,
                       std::vector<std::string>* warnings = nullptr);

// Rolling windows: sample i has history frames [i, i+n) and target frame
// i+n's channel 0. Requires frame_count >= n+1.
std::vector<Sample> window(const MarketVideo& video, int n);

// Pearson correlation between a feature and the target over all pooled
// (zone, hour) pairs of the video.
double feature_correlation(const MarketVideo& video, const std::string& feature,
                           const std::string& target = "RTLMP");

// Stats persistence: text file "feature,min_C,max_Cplus", 17 significant
// digits, one row per feature in the given order.
void save_norm_stats(const std::string& path, const std::vector<std::string>& features,
                     const NormStatsMap& stats);
NormStatsMap load_norm_stats(const std::string& path,
                             std::vector<std::string>* feature_order = nullptr);

// --- CSV ingestion (see README for the schema) ---

struct IngestResult {
  MarketVideo video;  // raw values
  std::vector<std::string> warnings;
  std::size_t rows_read = 0;
  std::size_t cells_filled = 0;
};

// Reads a wide-form CSV "timestamp,zone,<features...>". Single missing
// hours are forward-filled (up to 6 consecutive); longer gaps are errors.
IngestResult ingest_csv(const std::string& path, const GridLayout& layout,
                        const std::vector<std::string>& features);

// Writes a video back out in the ingestion schema (used by the synthetic
// generator and for persisting normalized data).
void write_market_csv(const std::string& path, const MarketVideo& video);

}  // namespace lmpgan

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include <doctest.h>

#include "lmpgan/market_data.hpp"
#include "lmpgan/rng.hpp"
#include "lmpgan/synth.hpp"

using namespace lmpgan;

namespace {

SynthConfig base_config(std::uint64_t seed, std::size_t hours, double spike_rate) {
  SynthConfig config;
  config.seed = seed;
  config.layout = GridLayout{3, 3, {"A", "B", "C", "D", "E", "F", "G", "H", "I"}};
  config.hours = hours;
  config.spike_rate = spike_rate;
  return config;
}

std::vector<double> zone_series(const MarketVideo& video, int z, int channel = 0) {
  std::vector<double> out;
  int r, c;
  video.layout.cell_of(z, r, c);
  for (const auto& frame : video.frames) {
    out.push_back(frame.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c),
                                   static_cast<std::size_t>(channel)));
  }
  return out;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
    saa += a[i] * a[i];
    sbb += b[i] * b[i];
    sab += a[i] * b[i];
  }
  return (sab - sa * sb / n) /
         std::sqrt((saa - sa * sa / n) * (sbb - sb * sb / n));
}

}  // namespace

TEST_SUITE("market_data") {

TEST_CASE("synth is deterministic per seed") {
  MarketVideo a = synth_market(base_config(42, 200, 0.01));
  MarketVideo b = synth_market(base_config(42, 200, 0.01));
  REQUIRE(a.frame_count() == b.frame_count());
  for (std::size_t f = 0; f < a.frame_count(); ++f) {
    for (std::size_t i = 0; i < a.frames[f].values.size(); ++i) {
      CHECK(a.frames[f].values[i] == b.frames[f].values[i]);  // bit-identical
    }
  }
  MarketVideo c = synth_market(base_config(43, 200, 0.01));
  bool differs = false;
  for (std::size_t i = 0; i < a.frames[0].values.size(); ++i) {
    differs = differs || a.frames[0].values[i] != c.frames[0].values[i];
  }
  CHECK(differs);
}

TEST_CASE("synth without spikes keeps max/median ratio under 3") {
  MarketVideo video = synth_market(base_config(7, 1000, 0.0));
  for (int z = 0; z < 9; ++z) {
    std::vector<double> prices = zone_series(video, z);
    std::vector<double> sorted = prices;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double max = sorted.back();
    CHECK(max / median < 3.0);
  }
}

TEST_CASE("synth neighbor correlation beats shuffled pairs") {
  MarketVideo video = synth_market(base_config(9, 1500, 0.0));
  // Adjacent pair (0,1) on the 3x3 grid vs. the same pair time-shuffled.
  std::vector<double> a = zone_series(video, 0);
  std::vector<double> b = zone_series(video, 1);
  const double neighbor = pearson(a, b);

  std::vector<double> shuffled = b;
  Rng rng(123);
  rng.shuffle(shuffled);
  const double control = pearson(a, shuffled);
  CHECK(neighbor > 0.5);
  CHECK(neighbor > control);
}

TEST_CASE("synth demand drives the price level") {
  MarketVideo video = synth_market(base_config(21, 1000, 0.0));
  CHECK(feature_correlation(video, "DEMAND", "RTLMP") > 0.8);
  CHECK(feature_correlation(video, "DALMP", "RTLMP") > 0.3);
}

TEST_CASE("synth with spikes produces occasional large excursions") {
  MarketVideo calm = synth_market(base_config(5, 2000, 0.0));
  MarketVideo spiky = synth_market(base_config(5, 2000, 0.01));
  double calm_max = 0, spiky_max = 0;
  for (int z = 0; z < 9; ++z) {
    for (double v : zone_series(calm, z)) calm_max = std::max(calm_max, v);
    for (double v : zone_series(spiky, z)) spiky_max = std::max(spiky_max, v);
  }
  CHECK(spiky_max > 1.5 * calm_max);
}

TEST_CASE("synth output round-trips through the CSV schema") {
  SynthConfig config = base_config(3, 50, 0.01);
  MarketVideo video = synth_market(config);
  const std::string path =
      (std::filesystem::temp_directory_path() / "lmpgan_synth_roundtrip.csv").string();
  write_market_csv(path, video);
  IngestResult result = ingest_csv(path, config.layout, video.features);
  CHECK(result.video.frame_count() == video.frame_count());
  CHECK(result.warnings.empty());
  // %.10g round-trip keeps 10 significant digits.
  CHECK(result.video.frames[7].values.at3(1, 2, 0) ==
        doctest::Approx(video.frames[7].values.at3(1, 2, 0)).epsilon(1e-9));
  std::filesystem::remove(path);
}

}  // TEST_SUITE

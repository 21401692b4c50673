#pragma once

#include <cstdint>

#include "lmpgan/market_data.hpp"

namespace lmpgan {

// Synthetic zonal market data for tests and the desk-scale harness.
// Per-zone hourly series combine a base level, daily and weekly cycles,
// spatially correlated noise (adjacent zones share most of their noise),
// and optional Poisson price spikes. Demand drives the price level and
// the day-ahead price is a smoothed real-time price plus noise.
struct SynthConfig {
  std::uint64_t seed = 1;
  GridLayout layout;
  std::size_t hours = 0;
  double spike_rate = 0.004;  // per zone-hour probability of starting a spike
  std::int64_t start_timestamp = 1483228800;  // 2017-01-01T00:00:00Z
};

// Deterministic per config; features are RTLMP, DALMP, DEMAND.
MarketVideo synth_market(const SynthConfig& config);

}  // namespace lmpgan

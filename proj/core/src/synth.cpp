#include "lmpgan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lmpgan/errors.hpp"
#include "lmpgan/rng.hpp"

namespace lmpgan {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Mixes a shared system factor with a locally smoothed white-noise field,
// giving adjacent zones a noise correlation well above 0.5 while keeping
// unit-ish variance.
class SpatialNoise {
 public:
  SpatialNoise(const GridLayout& layout) : layout_(layout) {
    const int zones = layout.zone_count();
    neighbors_.resize(zones);
    for (int z = 0; z < zones; ++z) {
      int r, c;
      layout.cell_of(z, r, c);
      auto add = [&](int rr, int cc) {
        if (rr >= 0 && rr < layout.rows && cc >= 0 && cc < layout.cols) {
          neighbors_[z].push_back(rr * layout.cols + cc);
        }
      };
      add(r - 1, c);
      add(r + 1, c);
      add(r, c - 1);
      add(r, c + 1);
    }
    white_.resize(zones);
  }

  // One draw per zone plus one shared draw, in fixed order.
  void step(Rng& rng, std::vector<double>& out) {
    const double shared = rng.normal();
    for (auto& w : white_) w = rng.normal();
    const int zones = layout_.zone_count();
    out.resize(zones);
    for (int z = 0; z < zones; ++z) {
      double local = white_[z];
      for (int nb : neighbors_[z]) local += 0.9 * white_[nb];
      local /= std::sqrt(1.0 + 0.81 * static_cast<double>(neighbors_[z].size()));
      out[z] = 0.6 * shared + 0.8 * local;
    }
  }

  const std::vector<int>& neighbors(int z) const { return neighbors_[z]; }

 private:
  GridLayout layout_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<double> white_;
};

}  // namespace

MarketVideo synth_market(const SynthConfig& config) {
  config.layout.validate();
  if (config.hours < 1) throw ConfigError("synthetic span must cover at least 1 hour");

  const int zones = config.layout.zone_count();
  Rng rng(config.seed, /*stream=*/0x53594e54);  // "SYNT"

  std::vector<double> zone_scale(zones);
  for (auto& s : zone_scale) s = 1.0 + 0.08 * rng.normal();

  SpatialNoise demand_noise(config.layout);
  SpatialNoise price_noise(config.layout);

  MarketVideo video;
  video.layout = config.layout;
  video.features = {"RTLMP", "DALMP", "DEMAND"};

  std::vector<std::vector<double>> rtlmp_hist(zones);  // for the smoothed DA price
  std::vector<std::vector<double>> spike_mult(zones);  // pending spike multipliers
  std::vector<double> nd, np;

  for (std::size_t h = 0; h < config.hours; ++h) {
    const std::int64_t ts =
        config.start_timestamp + static_cast<std::int64_t>(h) * kHourSeconds;
    const double abs_hour = static_cast<double>(ts / kHourSeconds);
    const double s_day = std::sin(kTwoPi * std::fmod(abs_hour, 24.0) / 24.0 - 2.0);
    const double s_week = std::sin(kTwoPi * std::fmod(abs_hour, 168.0) / 168.0 + 0.7);

    demand_noise.step(rng, nd);
    price_noise.step(rng, np);

    MarketFrame frame;
    frame.timestamp = ts;
    frame.values = nn::Tensor({static_cast<std::size_t>(config.layout.rows),
                               static_cast<std::size_t>(config.layout.cols), 3});

    for (int z = 0; z < zones; ++z) {
      const double demand =
          1000.0 * zone_scale[z] + 260.0 * s_day + 90.0 * s_week + 55.0 * nd[z];
      const double core = 10.0 + 0.03 * demand + 3.0 * np[z];

      // Spike initiation; effects decay over the event and spill to neighbors.
      if (config.spike_rate > 0.0 && rng.uniform() < config.spike_rate) {
        const int duration = 1 + static_cast<int>(rng.below(3));
        const double amp = 1.5 - 1.5 * std::log(1.0 - rng.uniform());
        for (int k = 0; k < duration; ++k) {
          const double f = 1.0 + (amp - 1.0) * (1.0 - static_cast<double>(k) / duration);
          const std::size_t slot = h + static_cast<std::size_t>(k);
          auto bump = [&](int zz, double factor) {
            if (spike_mult[zz].size() <= slot) spike_mult[zz].resize(slot + 1, 1.0);
            spike_mult[zz][slot] = std::max(spike_mult[zz][slot], factor);
          };
          bump(z, f);
          for (int nb : price_noise.neighbors(z)) bump(nb, 1.0 + 0.5 * (f - 1.0));
        }
      }
      double mult = 1.0;
      if (spike_mult[z].size() > h) mult = spike_mult[z][h];
      const double rtlmp = core * mult;

      // Day-ahead price: trailing daily average of settled prices plus noise.
      double ma;
      const auto& hist = rtlmp_hist[z];
      if (hist.empty()) {
        ma = core;
      } else {
        const std::size_t w = std::min<std::size_t>(24, hist.size());
        double acc = 0.0;
        for (std::size_t k = hist.size() - w; k < hist.size(); ++k) acc += hist[k];
        ma = acc / static_cast<double>(w);
      }
      const double dalmp = ma + 1.2 * rng.normal();

      rtlmp_hist[z].push_back(rtlmp);
      int r, c;
      config.layout.cell_of(z, r, c);
      frame.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 0) = rtlmp;
      frame.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 1) = dalmp;
      frame.values.at3(static_cast<std::size_t>(r), static_cast<std::size_t>(c), 2) = demand;
    }
    video.frames.push_back(std::move(frame));
  }
  return video;
}

}  // namespace lmpgan

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace lmpgan {

// splitmix64 step; used for seeding and deriving independent streams.
std::uint64_t splitmix64(std::uint64_t& state);

// xoshiro256++ generator. Chosen over std:: engines because its 32-byte
// state serializes into checkpoints and its output is identical on every
// platform, which the reproducibility contract depends on.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);
  // Independent stream for the same seed (init vs. sampling vs. dropout).
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller; no cached spare so the stream state
  // fully determines the next draw.
  double normal();

  // N(0, stddev^2) redrawn until |x| <= bound.
  double truncated_normal(double stddev, double bound);

  // Unbiased integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace lmpgan

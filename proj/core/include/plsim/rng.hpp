#pragma once

#include <array>
#include <cstdint>

namespace plsim {

/// Philox4x64-10 counter-based generator (Salmon et al., Random123).
/// Pure function of (counter, key).
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter, std::array<std::uint64_t, 2> key);

/// Sequential draws from the substream keyed by (seed, stream). Distinct
/// streams are statistically independent, so replicate r of a Monte Carlo run
/// uses stream r regardless of which thread computes it.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{};
  std::array<std::uint64_t, 4> block_{};
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace plsim

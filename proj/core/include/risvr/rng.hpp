#pragma once

#include <cstdint>
#include <random>

namespace risvr {

/// Seeded random stream. All samplers are hand-rolled on top of the
/// standard-specified mt19937_64 core so that sequences are identical
/// across platforms and standard-library implementations; byte-exact
/// reproducibility of whole simulation runs depends on this.
///
/// Independent substreams are derived from (seed, purpose, index) so
/// that consumers (mobility, blockage, phases, arrivals, scheduler,
/// policy) never share a stream: a scheduler that draws more or fewer
/// variates cannot desynchronize the environment randomness, which is
/// what makes common-random-number comparisons meaningful.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Derive an independent stream for (seed, purpose, index).
  static Rng substream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index);

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + uniform() * (b - a); }

  /// Uniform angle in [-pi, pi).
  double angle();

  /// Unbiased uniform integer in [0, n), n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Poisson draw; exact for any finite lambda >= 0.
  int poisson(double lambda);

 private:
  std::mt19937_64 gen_;
};

/// Stream purposes used by the simulation harness. Fixed numbering is
/// part of the reproducibility contract.
enum class StreamPurpose : std::uint64_t {
  placement = 1,
  mobility = 2,
  blockage = 3,
  phases = 4,
  arrivals = 5,
  scheduler = 6,
  policy = 7,
  train = 8,
};

inline Rng make_stream(std::uint64_t seed, StreamPurpose p, std::uint64_t index = 0) {
  return Rng::substream(seed, static_cast<std::uint64_t>(p), index);
}

}  // namespace risvr

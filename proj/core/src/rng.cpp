#include "risvr/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace risvr {
namespace {

// splitmix64 finalizer; good avalanche for seed derivation.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::substream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  std::uint64_t s = mix64(seed ^ mix64(purpose));
  s = mix64(s ^ mix64(index + 0x51ED270B0A1CE86DULL));
  return Rng(s);
}

double Rng::angle() {
  return uniform(-std::numbers::pi, std::numbers::pi);
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index: n must be >= 1");
  // Rejection sampling over the largest multiple of n below 2^64.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

int Rng::poisson(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("poisson: rate must be finite and >= 0");
  int total = 0;
  // Knuth's product method, chunked so exp(-lambda) stays well above
  // double underflow for large rates. Exact in distribution.
  constexpr double kChunk = 30.0;
  while (lambda > kChunk) {
    total += poisson(kChunk);
    lambda -= kChunk;
  }
  if (lambda == 0.0) return total;
  const double threshold = std::exp(-lambda);
  double p = 1.0;
  int k = 0;
  do {
    ++k;
    p *= uniform();
  } while (p > threshold);
  return total + k - 1;
}

}  // namespace risvr

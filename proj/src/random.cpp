#include "birdxfer/random.hpp"

namespace birdxfer {

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (std::uint64_t p : parts) {
    state ^= p + 0x9E3779B97F4A7C15ull + (state << 6) + (state >> 2);
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    state = z ^ (z >> 31);
  }
  return state;
}

double Rng::uniform(double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::int64_t Rng::integer(std::int64_t lo, std::int64_t hi) {
  if (lo >= hi) return lo;
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

}  // namespace birdxfer

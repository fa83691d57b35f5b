#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace birdxfer {

// Derives an independent stream seed from a root seed and coordinates such as
// (epoch, sample index). splitmix64 finalizer over the folded inputs.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

// Randomness consumed by the augmentation stages. Tests substitute scripted
// implementations.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  // Uniform on [lo, hi].
  virtual double uniform(double lo, double hi) = 0;
  // Uniform integer on [lo, hi] inclusive.
  virtual std::int64_t integer(std::int64_t lo, std::int64_t hi) = 0;
};

class Rng final : public RandomSource {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) override;
  std::int64_t integer(std::int64_t lo, std::int64_t hi) override;
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace birdxfer

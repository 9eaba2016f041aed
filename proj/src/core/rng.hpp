#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace sparft {

// Seeded 64-bit Mersenne Twister with distribution code owned here, so the
// stream of values is identical across standard libraries and the complete
// generator state can be written to and read back from a checkpoint.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t index(std::uint64_t n);

  // Standard normal via Box-Muller; consumes exactly two uniforms, no caching.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t draws() const noexcept { return draws_; }

  std::string serialize() const;
  static Rng deserialize(const std::string& text, std::uint64_t draws);

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_ && a.draws_ == b.draws_;
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

// Derive an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace sparft

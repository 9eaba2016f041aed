#include "rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "error.hpp"

namespace sparft {

std::uint64_t Rng::index(std::uint64_t n) {
  require(n > 0, "Rng::index requires n > 0");
  ++draws_;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const std::uint64_t x = engine_();
    if (x < limit) return x % n;
  }
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::string Rng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

Rng Rng::deserialize(const std::string& text, std::uint64_t draws) {
  Rng rng;
  std::istringstream is(text);
  is >> rng.engine_;
  if (is.fail()) fail(ErrorCode::CorruptArtifact, "invalid generator state");
  rng.draws_ = draws;
  return rng;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace sparft

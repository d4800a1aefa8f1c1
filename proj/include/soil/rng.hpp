#ifndef SOIL_RNG_HPP_
#define SOIL_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace soil {

// Every source of randomness in a run is a named stream derived from the
// master seed by a counter-based splitting scheme: the stream key is a
// splitmix64 chain over (master, purpose, a, b). Streams are independent of
// worker count and of each other, so rollouts taken in parallel and
// algorithms sharing a seed consume identical noise.
enum class StreamPurpose : std::uint64_t {
  kPolicyInit = 1,
  kValueInit = 2,
  kInverseInit = 3,
  kDiscriminatorInit = 4,
  kEnvReset = 5,
  kRolloutNoise = 6,
  kBaselineShuffle = 7,
  kInverseSample = 8,
  kDiscriminatorShuffle = 9,
  kEval = 10,
  kGeneric = 11,
  kDemoGen = 12,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_key(std::uint64_t master, StreamPurpose purpose,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = master;
  std::uint64_t k = splitmix64(s);
  s = k ^ (static_cast<std::uint64_t>(purpose) * 0xA24BAED4963EE407ull);
  k = splitmix64(s);
  s = k ^ (a * 0x9FB21C651E98DF25ull);
  k = splitmix64(s);
  s = k ^ (b * 0xD6E8FEB86659FD93ull);
  return splitmix64(s);
}

// Deterministic scalar RNG stream. Gaussian draws use plain Box-Muller (two
// uniforms per normal, no caching) so the draw count per call is fixed.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}
  RngStream(std::uint64_t master, StreamPurpose purpose, std::uint64_t a = 0,
            std::uint64_t b = 0)
      : state_(derive_key(master, purpose, a, b)) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace soil

#endif  // SOIL_RNG_HPP_

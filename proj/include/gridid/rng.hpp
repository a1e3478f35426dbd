#pragma once

#include <cmath>
#include <cstdint>

namespace gridid::rng {

// Counter-based generator: every draw is a pure function of (seed, stream,
// index), so parallel fills give the same numbers in any execution order.

inline uint64_t mix(uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

inline uint64_t hash3(uint64_t seed, uint64_t stream, uint64_t idx) {
  uint64_t h = mix(seed + 0x9e3779b97f4a7c15ULL);
  h = mix(h ^ (stream + 0x9e3779b97f4a7c15ULL));
  h = mix(h ^ (idx + 0x9e3779b97f4a7c15ULL));
  return h;
}

// (0,1]; never returns 0 so log() below is safe.
inline double uniform01(uint64_t h) {
  return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

// One standard normal per (seed, stream, idx) via Box-Muller.
inline double normal(uint64_t seed, uint64_t stream, uint64_t idx) {
  const double u1 = uniform01(hash3(seed, stream, 2 * idx));
  const double u2 = uniform01(hash3(seed, stream, 2 * idx + 1));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692 * u2);
}

// Independent child generator per concurrent work item (e.g. sweep cell).
inline uint64_t child_seed(uint64_t master, uint64_t cell) {
  return hash3(master, 0x5eedcafeULL, cell);
}

// Stream ids per generated quantity; keeps draws independent across uses.
enum Stream : uint64_t {
  kLoadP = 1,
  kLoadQ = 2,
  kSlackV = 3,
  kNoiseV = 4,
  kNoiseTheta = 5,
  kNoiseP = 6,
  kNoiseQ = 7,
};

}  // namespace gridid::rng

#pragma once

#include <cstdint>
#include <cmath>

namespace congest {

// Deterministic splitmix64 stream. Hand-rolled so results are identical across
// platforms and standard library versions (std::uniform_int_distribution is
// implementation-defined, which would break byte-identical rerun guarantees).
struct Rng {
  uint64_t state = 0x9e3779b97f4a7c15ull;

  explicit Rng(uint64_t seed = 0) : state(seed + 0x9e3779b97f4a7c15ull) {}

  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, bound). bound = 0 yields 0. Rejection-free multiply-shift
  // (Lemire); bias is < 2^-64 per draw, irrelevant at corpus scale, and the
  // result is platform-stable which is what matters here.
  uint64_t below(uint64_t bound) {
    if (bound == 0) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform integer in [lo, hi] inclusive.
  int64_t range(int64_t lo, int64_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin() { return (next() & 1ull) != 0; }
};

// Stable stream-splitting: derive an independent child seed from (seed, a, b).
// Used to give every node / part / iteration its own stream so that concurrent
// per-instance runs and reruns agree bit for bit.
inline uint64_t split_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
  Rng r(seed ^ (a * 0xd1342543de82ef95ull) ^ (b * 0xaf251af3b0f025b5ull));
  r.next();
  return r.next();
}

}  // namespace congest

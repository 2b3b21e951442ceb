#pragma once

#include <cstdint>
#include <cmath>

namespace tefs {

// splitmix64 stream. Standard-library distributions are not bit-stable
// across implementations, and datasets must hash identically wherever
// they are produced, so the generator and the mappings live here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // Derive an independent stream from a seed and up to three stream ids.
  static Rng stream(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    Rng r(seed);
    r.state_ ^= mix(a ^ 0x9e3779b97f4a7c15ULL);
    r.state_ ^= mix(b ^ 0xbf58476d1ce4e5b9ULL);
    r.state_ ^= mix(c ^ 0x94d049bb133111ebULL);
    return r;
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<uint64_t>(hi - lo + 1));
  }

  // Box-Muller, one value per call (the partner draw is discarded so the
  // stream position is a pure function of the call count).
  double gaussian() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  static uint64_t mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  uint64_t state_;
};

// FNV-1a, used for state and dataset tree hashing.
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update_u64(uint64_t v) { update(&v, sizeof v); }
  void update_double(double v) { update(&v, sizeof v); }
  uint64_t digest() const { return h_; }

 private:
  uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace tefs

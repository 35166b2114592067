#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace adalign {

// Counter-based random stream. The state is two 64-bit words (key, counter),
// so a stream can be stored in a checkpoint, copied for replay, or advanced
// to an arbitrary position. Every named substream of a seed is statistically
// independent of the others.
class CounterRng {
 public:
  CounterRng(uint64_t seed, std::string_view stream)
      : key_(derive_key(seed, stream)), counter_(0) {}

  CounterRng(uint64_t key, uint64_t counter) : key_(key), counter_(counter) {}

  uint64_t key() const { return key_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

  uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform in [0, 1), 53-bit resolution.
  double next_uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double next_normal() {
    double u1 = next_uniform();
    double u2 = next_uniform();
    // u1 == 0 would take log(0); the offset keeps it strictly positive.
    double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-53));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) { return next_u64() % n; }

  static uint64_t derive_key(uint64_t seed, std::string_view stream) {
    uint64_t h = 0xcbf29ce484222325ULL ^ mix(seed);
    for (char c : stream) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001b3ULL;
    }
    return mix(h);
  }

 private:
  // splitmix64 finalizer: a bijective 64-bit mixer.
  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_;
};

}  // namespace adalign

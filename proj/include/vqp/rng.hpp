#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace vqp {

// Deterministic 64-bit generator (splitmix64). The engine and the normal
// sampler are spelled out here so the same seed gives the same stream on
// every platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t state) : state_(state) {}

  static constexpr uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Derives an independent substream from a seed plus stream labels, e.g.
  // Rng::stream(seed, content_id, level, frame_index, tag("noise")).
  template <typename... Parts>
  static Rng stream(uint64_t seed, Parts... parts) {
    uint64_t s = mix(seed);
    ((s = mix(s ^ mix(static_cast<uint64_t>(parts)))), ...);
    return Rng(s);
  }

  static constexpr uint64_t tag(const char* s) {
    uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    while (*s) {
      h ^= static_cast<unsigned char>(*s++);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; the pair is cached so consecutive draws stay cheap.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Unbiased enough for shuffling; fixed-width multiply keeps it portable.
  uint64_t below(uint64_t n) {
    return static_cast<uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_ = 0;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace vqp

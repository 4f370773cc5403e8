#pragma once

#include <cstdint>

namespace ata {

// splitmix64. Tiny, fast, and identical on every platform, which is what
// byte-identical regeneration needs.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [lo, hi], inclusive. Modulo bias is irrelevant here.
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool coin(double p = 0.5) { return unit() < p; }

  // Derives an independent stream, e.g. one per benchmark case.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    Rng r(seed ^ (0x632be59bd9b4e019ull + salt * 0x9e3779b97f4a7c15ull));
    return r.next();
  }
};

}  // namespace ata

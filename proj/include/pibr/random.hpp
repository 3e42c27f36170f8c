#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pibr {

// SplitMix64 finalizer. Used to derive independent, platform-stable seeds
// from tuples like (run seed, step, agent).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(base);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

// Seeded stream with a portable uniform draw. std::uniform_real_distribution
// is implementation-defined, so doubles are built from the top 53 bits.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Modulo bias is negligible for the small n used.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pibr

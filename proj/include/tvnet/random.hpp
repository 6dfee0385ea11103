#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tvnet {

// SplitMix64 finalizer. Used to derive independent stream seeds from a master
// seed and a tuple of stream ids (run, time index, replicate, ...).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> ids) noexcept {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t id : ids) s = splitmix64(s ^ splitmix64(id + 0x632BE59BD9B4E019ULL));
  return s;
}

// Seedable generator: MT19937-64 with a platform-independent mapping to
// doubles and bounded integers, so streams are reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, bound) by rejection, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do r = engine_(); while (r >= limit);
    return r % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tvnet

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace augpt {

// SplitMix64 step. Also the mixer behind seed derivation.
inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Folds the parts into one 64-bit seed. Order-sensitive, collision-sparse.
inline uint64_t mix_seed(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (uint64_t p : parts) {
    uint64_t s = h ^ p;
    h = splitmix64_next(s);
  }
  return h;
}

// Seed for the stream owned by one (run, image, epoch, slot) coordinate.
// Every reproducibility contract in the pipeline routes through this.
inline uint64_t derive_seed(uint64_t base_seed, std::string_view image_key,
                            int64_t epoch, int64_t slot) {
  return mix_seed({base_seed, fnv1a64(image_key), static_cast<uint64_t>(epoch),
                   static_cast<uint64_t>(slot)});
}

// Deterministic random stream. One instance per logical consumer; a stream
// handle must never be shared between threads.
class RandomStream {
 public:
  explicit RandomStream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() { return splitmix64_next(state_); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n), n > 0; multiply-shift, no modulo bias worth caring about here
  uint32_t uniform_int(uint32_t n) {
    return static_cast<uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool coin() { return (next_u64() >> 63) != 0; }

  // Box-Muller, two uniforms per draw, no cached spare (keeps replay trivial)
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
};

// Fisher-Yates permutation of {0..n-1} drawn from the given seed.
inline std::vector<int> shuffled_indices(size_t n, uint64_t seed) {
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  RandomStream rs(seed);
  for (size_t i = n; i > 1; --i) {
    size_t j = rs.uniform_int(static_cast<uint32_t>(i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace augpt
